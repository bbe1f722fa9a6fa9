#include "lpvh2/plant_io.h"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "lpvh2/errors.h"
#include "lpvh2/numeric_format.h"

namespace lpvh2 {
namespace {

using json = nlohmann::json;

// Tracks the line of the last non-whitespace character the lexer consumed.
// The lexer reads one character past numbers, so the current line alone
// would be off by one for a number at the end of a line.
struct LineCounter {
  int line = 1;
  int token_line = 1;
};

class CountingIterator {
 public:
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  CountingIterator(const char* p, LineCounter* counter)
      : p_(p), counter_(counter) {}

  reference operator*() const { return *p_; }
  CountingIterator& operator++() {
    const char c = *p_;
    if (c == '\n') {
      ++counter_->line;
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      counter_->token_line = counter_->line;
    }
    ++p_;
    return *this;
  }
  CountingIterator operator++(int) {
    CountingIterator old = *this;
    ++*this;
    return old;
  }
  bool operator==(const CountingIterator& o) const { return p_ == o.p_; }
  bool operator!=(const CountingIterator& o) const { return p_ != o.p_; }

 private:
  const char* p_;
  LineCounter* counter_;
};

// Builds the DOM and records the line of every value by JSON pointer.
class LineTrackingSax : public nlohmann::json_sax<json> {
 public:
  LineTrackingSax(json& root, const LineCounter& counter,
                  std::map<std::string, int>& lines)
      : root_(root), counter_(counter), lines_(lines) {}

  bool null() override { return put(nullptr); }
  bool boolean(bool v) override { return put(v); }
  bool number_integer(number_integer_t v) override { return put(v); }
  bool number_unsigned(number_unsigned_t v) override { return put(v); }
  bool number_float(number_float_t v, const string_t&) override {
    return put(v);
  }
  bool string(string_t& v) override { return put(v); }
  bool binary(binary_t&) override {
    return fail("binary values are not supported");
  }

  bool start_object(std::size_t) override {
    return open(json::object());
  }
  bool key(string_t& k) override {
    Frame& top = stack_.back();
    if (top.value->contains(k)) {
      return fail("duplicate key \"" + k + "\"");
    }
    top.key = k;
    return true;
  }
  bool end_object() override {
    stack_.pop_back();
    return true;
  }
  bool start_array(std::size_t) override { return open(json::array()); }
  bool end_array() override {
    stack_.pop_back();
    return true;
  }

  bool parse_error(std::size_t, const std::string& last_token,
                   const json::exception& ex) override {
    std::string what = ex.what();
    // Drop the library's "[json.exception...] parse error at line L,
    // column C: " prefix; the line is reported separately.
    const auto colon = what.find(": ");
    if (colon != std::string::npos) what = what.substr(colon + 2);
    (void)last_token;
    error_line = counter_.line;
    error = "JSON syntax error: " + what;
    return false;
  }

  int error_line = 0;
  std::string error;

 private:
  struct Frame {
    json* value;
    std::string path;
    std::string key;
  };

  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out += c;
    }
    return out;
  }

  // Inserts `v` at the current position; returns it and its pointer.
  std::pair<json*, std::string> insert(json v) {
    if (stack_.empty()) {
      root_ = std::move(v);
      lines_[""] = counter_.token_line;
      return {&root_, ""};
    }
    Frame& top = stack_.back();
    std::string path;
    json* slot;
    if (top.value->is_object()) {
      path = top.path + "/" + escape(top.key);
      slot = &(*top.value)[top.key];
      *slot = std::move(v);
    } else {
      path = top.path + "/" + std::to_string(top.value->size());
      top.value->push_back(std::move(v));
      slot = &top.value->back();
    }
    lines_[path] = counter_.token_line;
    return {slot, path};
  }

  bool put(json v) {
    insert(std::move(v));
    return true;
  }

  bool open(json container) {
    auto [slot, path] = insert(std::move(container));
    stack_.push_back({slot, path, {}});
    return true;
  }

  bool fail(const std::string& message) {
    error_line = counter_.token_line;
    error = message;
    return false;
  }

  json& root_;
  const LineCounter& counter_;
  std::map<std::string, int>& lines_;
  std::vector<Frame> stack_;
};

const char* const kBlockNames[] = {"A", "Bw", "B", "C", "D", "E"};

class PlantReader {
 public:
  PlantReader(const json& root, std::map<std::string, int> lines,
              std::string source)
      : root_(root), lines_(std::move(lines)), source_(std::move(source)) {}

  PolytopicLpvPlant read() {
    expect_object("", {"name", "description", "polytope", "base",
                       "coefficients", "vertex_systems"});
    std::string name;
    if (root_.contains("name")) name = read_string("/name");
    if (root_.contains("description")) read_string("/description");

    const ParameterPolytope polytope = read_polytope("/polytope");
    const bool affine = root_.contains("base") || root_.contains("coefficients");
    const bool direct = root_.contains("vertex_systems");
    if (affine && direct) {
      fail("", "give either \"base\" and \"coefficients\" or \"vertex_systems\", "
               "not both");
    }
    if (!affine && !direct) {
      fail("", "missing \"base\"/\"coefficients\" or \"vertex_systems\"");
    }

    PolytopicLpvPlant plant = affine ? read_affine(polytope)
                                     : read_direct(polytope);
    plant.name = name;
    return plant;
  }

 private:
  [[noreturn]] void fail(const std::string& ptr, const std::string& what) const {
    throw FileFormatError(source_, line_of(ptr),
                          (ptr.empty() ? std::string("document") : ptr) + ": " +
                              what);
  }

  int line_of(const std::string& ptr) const {
    const auto it = lines_.find(ptr);
    return it == lines_.end() ? 0 : it->second;
  }

  const json& at(const std::string& ptr) const {
    return root_.at(json::json_pointer(ptr));
  }

  void require(const std::string& ptr, const std::string& key) const {
    if (!at(ptr).contains(key)) fail(ptr, "missing required key \"" + key + "\"");
  }

  void expect_object(const std::string& ptr,
                     const std::set<std::string>& allowed) const {
    const json& v = at(ptr);
    if (!v.is_object()) fail(ptr, "expected an object");
    for (const auto& [key, value] : v.items()) {
      if (!allowed.count(key)) fail(ptr + "/" + key, "unknown key \"" + key + "\"");
    }
  }

  std::string read_string(const std::string& ptr) const {
    const json& v = at(ptr);
    if (!v.is_string()) fail(ptr, "expected a string");
    return v.get<std::string>();
  }

  double read_number(const std::string& ptr) const {
    const json& v = at(ptr);
    if (!v.is_number()) fail(ptr, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(ptr, "number is not finite");
    return d;
  }

  Eigen::VectorXd read_vector(const std::string& ptr) const {
    const json& v = at(ptr);
    if (!v.is_array() || v.empty()) fail(ptr, "expected a non-empty array of numbers");
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      out(static_cast<Eigen::Index>(i)) = read_number(ptr + "/" + std::to_string(i));
    }
    return out;
  }

  Eigen::MatrixXd read_matrix(const std::string& ptr) const {
    const json& v = at(ptr);
    if (!v.is_array() || v.empty()) {
      fail(ptr, "expected a non-empty array of rows");
    }
    std::vector<Eigen::VectorXd> rows;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string row_ptr = ptr + "/" + std::to_string(i);
      if (!at(row_ptr).is_array()) fail(row_ptr, "expected a row (array of numbers)");
      rows.push_back(read_vector(row_ptr));
      if (rows.back().size() != rows.front().size()) {
        fail(row_ptr, "row has " + std::to_string(rows.back().size()) +
                          " entries, expected " +
                          std::to_string(rows.front().size()));
      }
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    }
    return m;
  }

  ParameterPolytope read_polytope(const std::string& ptr) const {
    require("", "polytope");
    expect_object(ptr, {"kind", "lower", "upper", "vertices"});
    require(ptr, "kind");
    const std::string kind = read_string(ptr + "/kind");
    try {
      if (kind == "box") {
        if (at(ptr).contains("vertices")) {
          fail(ptr + "/vertices", "\"vertices\" is not allowed for a box");
        }
        require(ptr, "lower");
        require(ptr, "upper");
        const Eigen::VectorXd lower = read_vector(ptr + "/lower");
        const Eigen::VectorXd upper = read_vector(ptr + "/upper");
        if (lower.size() != upper.size()) {
          fail(ptr + "/upper", "\"lower\" and \"upper\" differ in length");
        }
        return ParameterPolytope::box(lower, upper);
      }
      if (kind == "vertices") {
        if (at(ptr).contains("lower") || at(ptr).contains("upper")) {
          fail(ptr, "\"lower\"/\"upper\" are only allowed for a box");
        }
        require(ptr, "vertices");
        const Eigen::MatrixXd v = read_matrix(ptr + "/vertices");
        std::vector<Eigen::VectorXd> vertices;
        for (Eigen::Index i = 0; i < v.rows(); ++i) vertices.push_back(v.row(i).transpose());
        return ParameterPolytope::from_vertices(std::move(vertices));
      }
    } catch (const FileFormatError&) {
      throw;
    } catch (const Error& e) {
      fail(ptr, e.what());
    }
    fail(ptr + "/kind", "kind must be \"box\" or \"vertices\", got \"" + kind + "\"");
  }

  // Reads a system object. Missing blocks are taken from `defaults` when
  // given, otherwise only D may be omitted (zero).
  LpvVertexSystem read_system(const std::string& ptr,
                              const LpvVertexSystem* defaults) const {
    expect_object(ptr, {"A", "Bw", "B", "C", "D", "E"});
    LpvVertexSystem s;
    Eigen::MatrixXd* blocks[] = {&s.a, &s.bw, &s.b, &s.c, &s.d, &s.e};
    const Eigen::MatrixXd* fallback[6] = {};
    if (defaults) {
      fallback[0] = &defaults->a;
      fallback[1] = &defaults->bw;
      fallback[2] = &defaults->b;
      fallback[3] = &defaults->c;
      fallback[4] = &defaults->d;
      fallback[5] = &defaults->e;
    }
    for (int i = 0; i < 6; ++i) {
      const std::string key = kBlockNames[i];
      if (at(ptr).contains(key)) {
        *blocks[i] = read_matrix(ptr + "/" + key);
      } else if (fallback[i]) {
        *blocks[i] = Eigen::MatrixXd::Zero(fallback[i]->rows(), fallback[i]->cols());
      } else if (key != "D") {
        fail(ptr, "missing required block \"" + key + "\"");
      }
    }
    if (!at(ptr).contains("D") && !defaults) {
      s.d = Eigen::MatrixXd::Zero(s.c.rows(), s.bw.cols());
    }
    check_shapes(ptr, s);
    if (defaults) check_same_shape(ptr, s, *defaults);
    return s;
  }

  void check_shapes(const std::string& ptr, const LpvVertexSystem& s) const {
    const Eigen::Index n = s.a.rows();
    auto bad = [&](const char* key, const std::string& what) {
      const std::string block_ptr = ptr + "/" + key;
      fail(lines_.count(block_ptr) ? block_ptr : ptr, std::string(key) + " " + what);
    };
    if (s.a.cols() != n) bad("A", "must be square");
    if (s.bw.rows() != n) bad("Bw", "must have " + std::to_string(n) + " rows");
    if (s.b.rows() != n) bad("B", "must have " + std::to_string(n) + " rows");
    if (s.c.cols() != n) bad("C", "must have " + std::to_string(n) + " columns");
    const Eigen::Index q = s.c.rows();
    if (s.d.rows() != q || s.d.cols() != s.bw.cols()) {
      bad("D", "must be " + std::to_string(q) + "x" + std::to_string(s.bw.cols()));
    }
    if (s.e.rows() != q) bad("E", "must have " + std::to_string(q) + " rows");
  }

  void check_same_shape(const std::string& ptr, const LpvVertexSystem& s,
                        const LpvVertexSystem& ref) const {
    const Eigen::MatrixXd* got[] = {&s.a, &s.bw, &s.b, &s.c, &s.d, &s.e};
    const Eigen::MatrixXd* want[] = {&ref.a, &ref.bw, &ref.b, &ref.c, &ref.d, &ref.e};
    for (int i = 0; i < 6; ++i) {
      if (got[i]->rows() != want[i]->rows() || got[i]->cols() != want[i]->cols()) {
        const std::string block_ptr = ptr + "/" + kBlockNames[i];
        fail(lines_.count(block_ptr) ? block_ptr : ptr,
             std::string(kBlockNames[i]) + " must be " +
                 std::to_string(want[i]->rows()) + "x" +
                 std::to_string(want[i]->cols()) + " like the first system");
      }
    }
  }

  PolytopicLpvPlant read_affine(const ParameterPolytope& polytope) const {
    require("", "base");
    require("", "coefficients");
    const LpvVertexSystem base = read_system("/base", nullptr);
    const json& coeffs = at("/coefficients");
    if (!coeffs.is_array()) fail("/coefficients", "expected an array of systems");
    if (static_cast<int>(coeffs.size()) != polytope.dimension()) {
      fail("/coefficients", "expected " + std::to_string(polytope.dimension()) +
                                " coefficient systems (one per parameter), got " +
                                std::to_string(coeffs.size()));
    }
    std::vector<LpvVertexSystem> systems;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      systems.push_back(read_system("/coefficients/" + std::to_string(k), &base));
    }
    try {
      return PolytopicLpvPlant::affine(polytope, base, std::move(systems));
    } catch (const Error& e) {
      fail("/coefficients", e.what());
    }
  }

  PolytopicLpvPlant read_direct(const ParameterPolytope& polytope) const {
    const json& list = at("/vertex_systems");
    if (!list.is_array() || list.empty()) {
      fail("/vertex_systems", "expected a non-empty array of systems");
    }
    if (static_cast<int>(list.size()) != polytope.num_vertices()) {
      fail("/vertex_systems", "expected " + std::to_string(polytope.num_vertices()) +
                                  " systems (one per polytope vertex), got " +
                                  std::to_string(list.size()));
    }
    std::vector<LpvVertexSystem> systems;
    systems.push_back(read_system("/vertex_systems/0", nullptr));
    for (std::size_t i = 1; i < list.size(); ++i) {
      const std::string ptr = "/vertex_systems/" + std::to_string(i);
      LpvVertexSystem s = read_system(ptr, nullptr);
      check_same_shape(ptr, s, systems.front());
      systems.push_back(std::move(s));
    }
    try {
      return PolytopicLpvPlant::direct(polytope, std::move(systems));
    } catch (const Error& e) {
      fail("/vertex_systems", e.what());
    }
  }

  const json& root_;
  std::map<std::string, int> lines_;
  std::string source_;
};

std::string read_all(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormatError(path, 0, "cannot open file");
  return in;
}

void write_vector(std::ostream& os, const Eigen::VectorXd& v) {
  os << '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << format_number(v(i));
  }
  os << ']';
}

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m,
                  const std::string& indent) {
  os << "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << (i ? ",\n" + indent + " " : "");
    write_vector(os, m.row(i).transpose());
  }
  os << "]";
}

void write_system(std::ostream& os, const LpvVertexSystem& s,
                  const std::string& indent) {
  const Eigen::MatrixXd* blocks[] = {&s.a, &s.bw, &s.b, &s.c, &s.d, &s.e};
  os << "{\n";
  for (int i = 0; i < 6; ++i) {
    const std::string key = kBlockNames[i];
    const std::string prefix = indent + "  \"" + key + "\": ";
    os << prefix;
    write_matrix(os, *blocks[i], std::string(prefix.size(), ' '));
    os << (i < 5 ? ",\n" : "\n");
  }
  os << indent << "}";
}

std::string json_string(const std::string& s) { return json(s).dump(); }

}  // namespace

PolytopicLpvPlant read_plant(std::istream& in, const std::string& source_name) {
  const std::string text = read_all(in);
  LineCounter counter;
  json root;
  std::map<std::string, int> lines;
  LineTrackingSax sax(root, counter, lines);
  const bool ok = json::sax_parse(CountingIterator(text.data(), &counter),
                                  CountingIterator(text.data() + text.size(), &counter),
                                  &sax);
  if (!ok) {
    throw FileFormatError(source_name, sax.error_line,
                          sax.error.empty() ? "invalid JSON" : sax.error);
  }
  return PlantReader(root, std::move(lines), source_name).read();
}

PolytopicLpvPlant read_plant_file(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  return read_plant(in, path);
}

void write_plant(std::ostream& os, const PolytopicLpvPlant& plant) {
  const ParameterPolytope& poly = plant.polytope();
  os << "{\n";
  if (!plant.name.empty()) os << "  \"name\": " << json_string(plant.name) << ",\n";
  os << "  \"polytope\": {\n";
  if (poly.kind() == ParameterPolytope::Kind::kBox) {
    os << "    \"kind\": \"box\",\n    \"lower\": ";
    write_vector(os, poly.lower());
    os << ",\n    \"upper\": ";
    write_vector(os, poly.upper());
    os << "\n";
  } else {
    Eigen::MatrixXd v(poly.num_vertices(), poly.dimension());
    for (int i = 0; i < poly.num_vertices(); ++i) v.row(i) = poly.vertices()[i].transpose();
    os << "    \"kind\": \"vertices\",\n    \"vertices\": ";
    write_matrix(os, v, std::string(16, ' '));
    os << "\n";
  }
  os << "  },\n";
  if (plant.form() == PolytopicLpvPlant::Form::kAffine) {
    os << "  \"base\": ";
    write_system(os, plant.base(), "  ");
    os << ",\n  \"coefficients\": [";
    const auto& coeffs = plant.coefficients();
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      os << (k ? ", " : "");
      write_system(os, coeffs[k], "    ");
    }
    os << "]\n";
  } else {
    os << "  \"vertex_systems\": [";
    const auto& systems = plant.vertex_systems();
    for (std::size_t k = 0; k < systems.size(); ++k) {
      os << (k ? ", " : "");
      write_system(os, systems[k], "    ");
    }
    os << "]\n";
  }
  os << "}\n";
}

Eigen::MatrixXd read_matrix_csv(std::istream& in, const std::string& source_name) {
  std::vector<std::vector<double>> rows;
  std::string text;
  int line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    const auto first = text.find_first_not_of(" \t");
    if (first == std::string::npos || text[first] == '#') continue;
    std::vector<double> row;
    std::stringstream fields(text);
    std::string field;
    while (std::getline(fields, field, ',')) {
      const auto b = field.find_first_not_of(" \t");
      const auto e = field.find_last_not_of(" \t");
      const std::string token =
          b == std::string::npos ? std::string() : field.substr(b, e - b + 1);
      char* end = nullptr;
      const double value = std::strtod(token.c_str(), &end);
      if (token.empty() || *end != '\0' || !std::isfinite(value)) {
        throw FileFormatError(source_name, line_no,
                              "invalid number \"" + token + "\"");
      }
      row.push_back(value);
    }
    if (text.back() == ',') {
      throw FileFormatError(source_name, line_no, "trailing comma");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FileFormatError(source_name, line_no,
                            "row has " + std::to_string(row.size()) +
                                " entries, expected " +
                                std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FileFormatError(source_name, 0, "no matrix rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

Eigen::MatrixXd read_matrix_csv_file(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  return read_matrix_csv(in, path);
}

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_number(m(i, j));
    }
    os << '\n';
  }
}

}  // namespace lpvh2
