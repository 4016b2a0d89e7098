#include <cstdio>
#include <fstream>
#include <sstream>

#include "shapeflow/error.hpp"
#include "shapeflow/mesh.hpp"

namespace shapeflow {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class LineReader {
 public:
  explicit LineReader(std::istream &in) : in_(in) {}

  // Next non-empty line, or false at end of input.
  bool next(std::istringstream &line) {
    std::string text;
    while (std::getline(in_, text)) {
      ++number_;
      if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
      line.clear();
      line.str(text);
      return true;
    }
    return false;
  }

  std::istringstream expect() {
    std::istringstream line;
    if (!next(line)) fail("unexpected end of file");
    return line;
  }

  [[noreturn]] void fail(const std::string &what) const {
    throw Error(ErrorKind::Io, "mesh file line " + std::to_string(number_) + ": " + what);
  }

  std::size_t header(const std::string &keyword) {
    auto line = expect();
    std::string word;
    long long count = -1;
    if (!(line >> word >> count) || word != keyword || count < 0)
      fail("expected '" + keyword + " <count>'");
    return static_cast<std::size_t>(count);
  }

 private:
  std::istream &in_;
  std::size_t number_ = 0;
};

}  // namespace

void write_mesh(const Mesh &mesh, const std::filesystem::path &path) {
  write_mesh(mesh, {}, path);
}

void write_mesh(const Mesh &mesh, std::span<const NamedField> fields,
                const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "mesh2d v1\n";
  out << "nodes " << mesh.node_count() << '\n';
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    const Vec2 &p = mesh.node(static_cast<int>(i));
    out << format_double(p.x()) << ' ' << format_double(p.y()) << ' '
        << int(mesh.node_is_shape()[i]) << '\n';
  }
  out << "triangles " << mesh.triangle_count() << '\n';
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const Triangle &tri = mesh.triangle(static_cast<int>(t));
    out << tri[0] << ' ' << tri[1] << ' ' << tri[2] << ' ' << mesh.cell_region()[t] << '\n';
  }
  out << "boundary " << mesh.boundary_edges().size() << '\n';
  for (const BoundaryEdge &e : mesh.boundary_edges())
    out << e.a << ' ' << e.b << ' ' << to_string(e.marker) << '\n';
  for (const NamedField &f : fields) {
    require(f.arity == 1 || f.arity == 2, "field arity must be 1 or 2");
    require(f.values.size() == mesh.node_count() * f.arity,
            "field '" + f.name + "' has the wrong length");
    require(!f.name.empty() && f.name.find_first_of(" \t\n") == std::string::npos,
            "field names must be single words");
    out << "field " << f.name << ' ' << f.arity << '\n';
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
      out << format_double(f.values[f.arity * i]);
      if (f.arity == 2) out << ' ' << format_double(f.values[2 * i + 1]);
      out << '\n';
    }
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

Mesh read_mesh(const std::filesystem::path &path) {
  std::vector<NamedField> ignored;
  return read_mesh(path, ignored);
}

Mesh read_mesh(const std::filesystem::path &path, std::vector<NamedField> &fields) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  LineReader reader(in);
  {
    auto line = reader.expect();
    std::string magic, version;
    if (!(line >> magic >> version) || magic != "mesh2d" || version != "v1")
      reader.fail("missing 'mesh2d v1' header");
  }

  const std::size_t n = reader.header("nodes");
  std::vector<Vec2> nodes(n);
  std::vector<int> flags(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto line = reader.expect();
    double x, y;
    int flag;
    if (!(line >> x >> y >> flag) || (flag != 0 && flag != 1)) reader.fail("bad node line");
    nodes[i] = Vec2(x, y);
    flags[i] = flag;
  }

  const std::size_t m = reader.header("triangles");
  std::vector<Triangle> triangles(m);
  std::vector<int> regions(m);
  for (std::size_t t = 0; t < m; ++t) {
    auto line = reader.expect();
    long long i, j, k;
    int region;
    if (!(line >> i >> j >> k >> region)) reader.fail("bad triangle line");
    for (const long long v : {i, j, k})
      if (v < 0 || v >= static_cast<long long>(n)) reader.fail("triangle index out of range");
    triangles[t] = {int(i), int(j), int(k)};
    regions[t] = region;
  }

  const std::size_t b = reader.header("boundary");
  std::vector<BoundaryEdge> edges(b);
  for (std::size_t e = 0; e < b; ++e) {
    auto line = reader.expect();
    long long i, j;
    std::string marker;
    if (!(line >> i >> j >> marker)) reader.fail("bad boundary line");
    if (i < 0 || j < 0 || i >= static_cast<long long>(n) || j >= static_cast<long long>(n))
      reader.fail("boundary index out of range");
    edges[e] = {int(i), int(j), marker_from_string(marker)};
  }

  fields.clear();
  std::istringstream line;
  while (reader.next(line)) {
    std::string word;
    NamedField f;
    if (!(line >> word >> f.name >> f.arity) || word != "field" ||
        (f.arity != 1 && f.arity != 2))
      reader.fail("expected 'field <name> <arity>'");
    f.values.resize(n * f.arity);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = reader.expect();
      for (int c = 0; c < f.arity; ++c)
        if (!(row >> f.values[f.arity * i + c])) reader.fail("bad field value");
    }
    fields.push_back(std::move(f));
  }

  Mesh mesh(std::move(nodes), std::move(triangles), std::move(regions), std::move(edges));
  for (std::size_t i = 0; i < n; ++i)
    if (flags[i] != mesh.node_is_shape()[i])
      throw Error(ErrorKind::Io, "shape flag of node " + std::to_string(i) +
                                     " disagrees with the shape edges");
  return mesh;
}

}  // namespace shapeflow
