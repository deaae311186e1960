#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rpls/operators.hpp"
#include "rpls/pipeline.hpp"
#include "rpls/prediction.hpp"

namespace rpls {

inline constexpr const char* version_string = "0.1.0";
inline constexpr const char* model_format = "rpls-model/1";
inline constexpr const char* operator_format = "rpls-operator/1";

// 64-bit FNV-1a; stamps outputs with a hash of the run configuration
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string fnv1a_hex(std::string_view s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(s)));
  return buf;
}

// shortest decimal form that parses back to the same double, so identical
// runs give byte-identical files
inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& what) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(s.data(), last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    throw IoError(what + ": not a number: '" + std::string(s) + "'");
  return v;
}

inline long parse_integer(std::string_view s, const std::string& what) {
  long v = 0;
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(s.data(), last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    throw IoError(what + ": not an integer: '" + std::string(s) + "'");
  return v;
}

namespace detail_io {

inline std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_comma(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(trim(std::string_view(line).substr(start)));
      return out;
    }
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    start = pos + 1;
  }
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

// reads the next meaningful line: strips CR, skips blanks and # comments
inline bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    return true;
  }
  return false;
}

}  // namespace detail_io

// ---------------------------------------------------------------------------
// CSV: first row is the header, one row per sample, no quoting. Lines starting
// with '#' are comments. Empty fields are treated as missing and rejected.

struct TextTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

inline TextTable read_csv_text(std::istream& in, const std::string& what = "csv") {
  TextTable t;
  std::string line;
  bool have_header = false;
  while (detail_io::next_line(in, line)) {
    auto fields = detail_io::split_comma(line);
    if (!have_header) {
      t.columns = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.columns.size())
      throw IoError(what + ": row " + std::to_string(t.rows.size() + 2) + " has " +
                    std::to_string(fields.size()) + " fields, header has " +
                    std::to_string(t.columns.size()));
    for (const auto& f : fields)
      if (f.empty())
        throw IoError(what + ": missing value in row " + std::to_string(t.rows.size() + 2));
    t.rows.push_back(std::move(fields));
  }
  if (!have_header) throw IoError(what + ": empty input, expected a header row");
  return t;
}

struct CsvTable {
  std::vector<std::string> columns;
  Matrix values;
};

inline CsvTable read_csv(std::istream& in, const std::string& what = "csv") {
  const TextTable t = read_csv_text(in, what);
  CsvTable c;
  c.columns = t.columns;
  c.values.resize(Eigen::Index(t.rows.size()), Eigen::Index(t.columns.size()));
  for (size_t i = 0; i < t.rows.size(); ++i)
    for (size_t j = 0; j < t.columns.size(); ++j)
      c.values(Eigen::Index(i), Eigen::Index(j)) = parse_double(t.rows[i][j], what);
  return c;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  return f;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  return f;
}

inline CsvTable read_csv_file(const std::string& path) {
  auto f = open_input(path);
  return read_csv(f, path);
}

inline TextTable read_csv_text_file(const std::string& path) {
  auto f = open_input(path);
  return read_csv_text(f, path);
}

// variable positions taken from the column names of a data CSV
inline Vector positions_from_header(const std::vector<std::string>& columns) {
  Vector pos(Eigen::Index(columns.size()));
  for (size_t j = 0; j < columns.size(); ++j)
    pos[Eigen::Index(j)] = parse_double(columns[j], "positions");
  return pos;
}

// every output file starts with these comment lines
struct OutputMeta {
  std::string config_hash = "0000000000000000";
  std::uint64_t seed = 0;

  void write(std::ostream& out) const {
    out << "# version: " << version_string << "\n";
    out << "# config: " << config_hash << "\n";
    out << "# seed: " << seed << "\n";
  }
};

inline void write_csv(std::ostream& out, const OutputMeta& meta,
                      const std::vector<std::string>& columns,
                      const std::vector<std::vector<std::string>>& rows) {
  meta.write(out);
  for (size_t j = 0; j < columns.size(); ++j)
    out << columns[j] << (j + 1 < columns.size() ? "," : "\n");
  for (const auto& row : rows) {
    if (row.size() != columns.size()) throw IoError("csv write: ragged row");
    for (size_t j = 0; j < row.size(); ++j) {
      if (row[j].find_first_of(",\n\r") != std::string::npos)
        throw IoError("csv write: field contains a delimiter: '" + row[j] + "'");
      out << row[j] << (j + 1 < row.size() ? "," : "\n");
    }
  }
}

inline void write_csv(std::ostream& out, const OutputMeta& meta,
                      const std::vector<std::string>& columns, const Matrix& values) {
  if (Eigen::Index(columns.size()) != values.cols())
    throw IoError("csv write: header width does not match the data");
  std::vector<std::vector<std::string>> rows(size_t(values.rows()));
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    rows[size_t(i)].reserve(size_t(values.cols()));
    for (Eigen::Index j = 0; j < values.cols(); ++j)
      rows[size_t(i)].push_back(format_double(values(i, j)));
  }
  write_csv(out, meta, columns, rows);
}

// ---------------------------------------------------------------------------
// Tagged text documents: the self-describing container behind the model and
// operator files. Line-oriented:
//
//   <format tag>
//   # comment
//   field <name> <token>...
//   matrix <name> <rows> <cols>
//   <row of numbers> ...
//   end

struct Document {
  std::string format;
  std::vector<std::pair<std::string, std::vector<std::string>>> fields;
  std::vector<std::pair<std::string, Matrix>> matrices;

  void add_field(const std::string& name, std::vector<std::string> tokens) {
    fields.emplace_back(name, std::move(tokens));
  }
  void add_text(const std::string& name, const std::string& text) {
    add_field(name, detail_io::split_ws(text));
  }
  void add_flag(const std::string& name, bool v) {
    add_field(name, {v ? std::string("1") : std::string("0")});
  }
  void add_integer(const std::string& name, long v) { add_field(name, {std::to_string(v)}); }
  void add_numbers(const std::string& name, const std::vector<double>& v) {
    std::vector<std::string> toks;
    toks.reserve(v.size());
    for (double x : v) toks.push_back(format_double(x));
    add_field(name, std::move(toks));
  }
  void add_numbers(const std::string& name, const Vector& v) {
    add_numbers(name, std::vector<double>(v.data(), v.data() + v.size()));
  }
  void add_matrix(const std::string& name, Matrix m) { matrices.emplace_back(name, std::move(m)); }

  bool has_field(const std::string& name) const {
    for (const auto& f : fields)
      if (f.first == name) return true;
    return false;
  }
  const std::vector<std::string>& tokens(const std::string& name) const {
    for (const auto& f : fields)
      if (f.first == name) return f.second;
    throw IoError("document: missing field '" + name + "'");
  }
  std::string text(const std::string& name) const {
    const auto& toks = tokens(name);
    std::string out;
    for (size_t i = 0; i < toks.size(); ++i) {
      if (i) out += ' ';
      out += toks[i];
    }
    return out;
  }
  double number(const std::string& name) const {
    const auto& toks = tokens(name);
    if (toks.size() != 1) throw IoError("document: field '" + name + "' is not a scalar");
    return parse_double(toks[0], name);
  }
  long integer(const std::string& name) const {
    const auto& toks = tokens(name);
    if (toks.size() != 1) throw IoError("document: field '" + name + "' is not a scalar");
    return parse_integer(toks[0], name);
  }
  bool flag(const std::string& name) const { return integer(name) != 0; }
  std::vector<double> numbers(const std::string& name) const {
    const auto& toks = tokens(name);
    std::vector<double> out;
    out.reserve(toks.size());
    for (const auto& t : toks) out.push_back(parse_double(t, name));
    return out;
  }
  Vector vector(const std::string& name) const {
    const auto v = numbers(name);
    return Eigen::Map<const Vector>(v.data(), Eigen::Index(v.size()));
  }
  bool has_matrix(const std::string& name) const {
    for (const auto& m : matrices)
      if (m.first == name) return true;
    return false;
  }
  const Matrix& matrix(const std::string& name) const {
    for (const auto& m : matrices)
      if (m.first == name) return m.second;
    throw IoError("document: missing matrix '" + name + "'");
  }
};

inline void write_document(std::ostream& out, const Document& doc, const OutputMeta& meta) {
  out << doc.format << "\n";
  meta.write(out);
  for (const auto& [name, toks] : doc.fields) {
    out << "field " << name;
    for (const auto& t : toks) out << ' ' << t;
    out << "\n";
  }
  for (const auto& [name, m] : doc.matrices) {
    out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << "\n";
    if (m.cols() == 0) continue;  // width-zero rows would be blank lines
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        out << format_double(m(i, j)) << (j + 1 < m.cols() ? " " : "");
      out << "\n";
    }
  }
  out << "end\n";
}

inline Document read_document(std::istream& in, const std::string& expected_format) {
  std::string line;
  if (!detail_io::next_line(in, line))
    throw IoError("document: empty input, expected format tag " + expected_format);
  if (detail_io::trim(line) != expected_format)
    throw ConfigError("format mismatch: file says '" + detail_io::trim(line) + "', expected '" +
                      expected_format + "'");
  Document doc;
  doc.format = expected_format;
  bool ended = false;
  while (detail_io::next_line(in, line)) {
    auto toks = detail_io::split_ws(line);
    if (toks[0] == "end") {
      ended = true;
      break;
    }
    if (toks[0] == "field") {
      if (toks.size() < 2) throw IoError("document: field line without a name");
      doc.add_field(toks[1], std::vector<std::string>(toks.begin() + 2, toks.end()));
      continue;
    }
    if (toks[0] == "matrix") {
      if (toks.size() != 4) throw IoError("document: matrix line needs name, rows, cols");
      const long r = parse_integer(toks[2], "matrix rows");
      const long c = parse_integer(toks[3], "matrix cols");
      if (r < 0 || c < 0) throw IoError("document: negative matrix dims");
      Matrix m(r, c);
      for (long i = 0; i < (c == 0 ? 0 : r); ++i) {
        if (!detail_io::next_line(in, line))
          throw IoError("document: matrix '" + toks[1] + "' truncated");
        const auto row = detail_io::split_ws(line);
        if (long(row.size()) != c)
          throw IoError("document: matrix '" + toks[1] + "' row " + std::to_string(i) +
                        " has " + std::to_string(row.size()) + " entries, expected " +
                        std::to_string(c));
        for (long j = 0; j < c; ++j) m(i, j) = parse_double(row[size_t(j)], toks[1]);
      }
      doc.add_matrix(toks[1], std::move(m));
      continue;
    }
    throw IoError("document: unrecognized line: '" + line + "'");
  }
  if (!ended) throw IoError("document: truncated, no end marker");
  return doc;
}

// ---------------------------------------------------------------------------
// Model files. Training factors and per-factor diagnostics are fit artifacts
// and stay out of the file; everything prediction needs is kept.

struct ModelFile {
  RplsModel model;
  long n_train = 0;
  bool has_regression = false;
  RegressionFit regression;
  bool has_lda = false;
  LdaModel lda;
};

namespace detail_io {

inline const char* family_name(PenaltyFamily f) {
  switch (f) {
    case PenaltyFamily::none: return "none";
    case PenaltyFamily::lasso: return "lasso";
    case PenaltyFamily::group_lasso: return "group_lasso";
  }
  throw IoError("unknown penalty family");
}

inline PenaltyFamily family_from(const std::string& s) {
  if (s == "none") return PenaltyFamily::none;
  if (s == "lasso") return PenaltyFamily::lasso;
  if (s == "group_lasso") return PenaltyFamily::group_lasso;
  throw IoError("unknown penalty family '" + s + "'");
}

// class labels travel as single tokens: percent-encode whitespace and friends
inline std::string escape_label(const std::string& s) {
  if (s.empty()) throw IoError("empty class label");
  std::string out;
  for (unsigned char c : s) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '%' || c == ',') {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02x", c);
      out += buf;
    } else {
      out += char(c);
    }
  }
  return out;
}

inline std::string unescape_label(const std::string& s) {
  auto hex = [&](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw IoError("bad escape in class label '" + s + "'");
  };
  std::string out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%') {
      if (i + 2 >= s.size()) throw IoError("bad escape in class label '" + s + "'");
      out += char(hex(s[i + 1]) * 16 + hex(s[i + 2]));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw IoError("model file: " + msg);
}

}  // namespace detail_io

inline void save_model(std::ostream& out, const ModelFile& mf, const OutputMeta& meta) {
  const RplsModel& m = mf.model;
  const long p = m.p(), K = m.K(), q = m.y_stats.mean.size();
  const long n = mf.n_train > 0 ? mf.n_train : long(m.Z.rows());
  Document d;
  d.format = model_format;
  d.add_field("dims", {std::to_string(n), std::to_string(p), std::to_string(q),
                       std::to_string(K)});
  d.add_text("penalty", detail_io::family_name(m.penalty.family));
  d.add_flag("nonnegative", m.penalty.nonnegative);
  d.add_flag("structured", m.structured);
  d.add_flag("x_scaled", m.x_stats.scaled);
  d.add_flag("y_scaled", m.y_stats.scaled);
  d.add_numbers("lambda", m.lambda);
  if (!m.stop_reason.empty()) d.add_text("stop_reason", m.stop_reason);
  if (m.penalty.family == PenaltyFamily::group_lasso) {
    std::vector<std::string> sizes, members;
    for (const auto& g : m.penalty.groups) {
      sizes.push_back(std::to_string(g.size()));
      for (int idx : g) members.push_back(std::to_string(idx));
    }
    d.add_field("group_sizes", std::move(sizes));
    d.add_field("group_members", std::move(members));
  }
  d.add_numbers("x_mean", m.x_stats.mean);
  d.add_numbers("x_scale", m.x_stats.scale);
  d.add_numbers("y_mean", m.y_stats.mean);
  d.add_numbers("y_scale", m.y_stats.scale);
  d.add_matrix("V", m.V);
  d.add_matrix("W", m.W);
  d.add_matrix("R", m.R);
  if (m.structured) d.add_matrix("Q", m.Q);
  d.add_flag("has_regression", mf.has_regression);
  if (mf.has_regression) {
    d.add_matrix("B", mf.regression.B);
    d.add_matrix("coefficients", mf.regression.coefficients);
    d.add_numbers("intercept", mf.regression.intercept);
  }
  d.add_flag("has_lda", mf.has_lda);
  if (mf.has_lda) {
    std::vector<std::string> classes;
    for (const auto& c : mf.lda.classes) classes.push_back(detail_io::escape_label(c));
    d.add_field("classes", std::move(classes));
    d.add_matrix("lda_means", mf.lda.means);
    d.add_matrix("lda_sigma_inv", mf.lda.sigma_inv);
    d.add_numbers("lda_log_prior", mf.lda.log_prior);
  }
  write_document(out, d, meta);
}

inline ModelFile load_model(std::istream& in) {
  using detail_io::require;
  const Document d = read_document(in, model_format);
  ModelFile mf;
  RplsModel& m = mf.model;

  const auto& dims = d.tokens("dims");
  require(dims.size() == 4, "dims needs n p q K");
  mf.n_train = parse_integer(dims[0], "dims n");
  const long p = parse_integer(dims[1], "dims p");
  const long q = parse_integer(dims[2], "dims q");
  const long K = parse_integer(dims[3], "dims K");
  require(p >= 1 && q >= 1 && K >= 1 && mf.n_train >= 0, "dims out of range");

  m.penalty.family = detail_io::family_from(d.text("penalty"));
  m.penalty.nonnegative = d.flag("nonnegative");
  m.structured = d.flag("structured");
  m.lambda = d.numbers("lambda");
  require(long(m.lambda.size()) == K, "lambda path length != K");
  m.penalty.lambda = m.lambda.empty() ? 0.0 : m.lambda.front();
  if (d.has_field("stop_reason")) m.stop_reason = d.text("stop_reason");

  if (m.penalty.family == PenaltyFamily::group_lasso) {
    const auto& sizes = d.tokens("group_sizes");
    const auto& members = d.tokens("group_members");
    size_t at = 0;
    for (const auto& stok : sizes) {
      const long len = parse_integer(stok, "group_sizes");
      require(len > 0 && at + size_t(len) <= members.size(), "group sizes inconsistent");
      std::vector<int> g;
      for (long i = 0; i < len; ++i)
        g.push_back(int(parse_integer(members[at++], "group_members")));
      m.penalty.groups.push_back(std::move(g));
    }
    require(at == members.size(), "group members left over");
    validate_groups(m.penalty, int(p));
  }

  m.x_stats.mean = d.vector("x_mean");
  m.x_stats.scale = d.vector("x_scale");
  m.x_stats.scaled = d.flag("x_scaled");
  m.y_stats.mean = d.vector("y_mean");
  m.y_stats.scale = d.vector("y_scale");
  m.y_stats.scaled = d.flag("y_scaled");
  require(m.x_stats.mean.size() == p && m.x_stats.scale.size() == p, "x stats length != p");
  require(m.y_stats.mean.size() == q && m.y_stats.scale.size() == q, "y stats length != q");

  m.V = d.matrix("V");
  m.W = d.matrix("W");
  m.R = d.matrix("R");
  require(m.V.rows() == p && m.V.cols() == K, "V dims");
  require(m.W.rows() == p && m.W.cols() == K, "W dims");
  require(m.R.rows() == p && m.R.cols() == K, "R dims");
  check_finite(m.V, "model V");
  check_finite(m.W, "model W");
  check_finite(m.R, "model R");
  if (m.structured) {
    m.Q = d.matrix("Q");
    require(m.Q.rows() == p && m.Q.cols() == p, "Q dims");
  }

  mf.has_regression = d.flag("has_regression");
  if (mf.has_regression) {
    mf.regression.B = d.matrix("B");
    mf.regression.coefficients = d.matrix("coefficients");
    mf.regression.intercept = d.vector("intercept");
    require(mf.regression.B.rows() == K && mf.regression.B.cols() == q, "B dims");
    require(mf.regression.coefficients.rows() == p && mf.regression.coefficients.cols() == q,
            "coefficient dims");
    require(mf.regression.intercept.size() == q, "intercept length");
  }

  mf.has_lda = d.flag("has_lda");
  if (mf.has_lda) {
    for (const auto& c : d.tokens("classes"))
      mf.lda.classes.push_back(detail_io::unescape_label(c));
    const long G = long(mf.lda.classes.size());
    require(G >= 2, "lda needs at least two classes");
    mf.lda.means = d.matrix("lda_means");
    mf.lda.sigma_inv = d.matrix("lda_sigma_inv");
    mf.lda.log_prior = d.vector("lda_log_prior");
    require(mf.lda.means.rows() == G && mf.lda.means.cols() == K, "lda mean dims");
    require(mf.lda.sigma_inv.rows() == K && mf.lda.sigma_inv.cols() == K, "lda sigma dims");
    require(mf.lda.log_prior.size() == G, "lda prior length");
  }
  return mf;
}

inline void save_model_file(const std::string& path, const ModelFile& mf,
                            const OutputMeta& meta) {
  auto f = open_output(path);
  save_model(f, mf, meta);
}

inline ModelFile load_model_file(const std::string& path) {
  auto f = open_input(path);
  return load_model(f);
}

// ---------------------------------------------------------------------------
// Operator files: the construction record plus the matrix itself. Loading
// re-validates positive semidefiniteness, so a hand-edited file cannot smuggle
// an indefinite operator into a fit.

inline void save_operator(std::ostream& out, const QuadraticOperator& op,
                          const OutputMeta& meta) {
  Document d;
  d.format = operator_format;
  d.add_text("kind", op.kind);
  d.add_field("bandwidth", {format_double(op.bandwidth)});
  if (op.positions.size() > 0) d.add_numbers("positions", op.positions);
  d.add_matrix("Q", op.Q);
  write_document(out, d, meta);
}

inline QuadraticOperator load_operator(std::istream& in) {
  const Document d = read_document(in, operator_format);
  const Matrix& Q = d.matrix("Q");
  QuadraticOperator op = validate_psd(Q);
  op.kind = d.text("kind");
  op.bandwidth = d.number("bandwidth");
  if (d.has_field("positions")) {
    op.positions = d.vector("positions");
    if (op.positions.size() != Q.rows())
      throw IoError("operator file: one position per variable required");
  }
  return op;
}

inline void save_operator_file(const std::string& path, const QuadraticOperator& op,
                               const OutputMeta& meta) {
  auto f = open_output(path);
  save_operator(f, op, meta);
}

inline QuadraticOperator load_operator_file(const std::string& path) {
  auto f = open_input(path);
  return load_operator(f);
}

}  // namespace rpls
