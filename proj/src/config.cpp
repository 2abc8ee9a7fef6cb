#include "condenser/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "condenser/error.hpp"
#include "condenser/experiments.hpp"

namespace condenser {

namespace {

[[noreturn]] void fail(const toml::source_region& where, const std::string& what) {
  std::ostringstream os;
  if (where.begin.line > 0) os << "line " << where.begin.line << ": ";
  os << what;
  throw Error(ErrorCode::ConfigError, os.str());
}

// Reader over one table: typed getters with range checks; leftover keys are errors.
class Table {
 public:
  Table(const toml::table* t, std::string path) : t_(t), path_(std::move(path)) {}

  bool present() const { return t_ != nullptr; }
  bool has(const std::string& key) const { return t_ && t_->contains(key); }

  Table sub(const std::string& key) {
    seen_.insert(key);
    if (!t_ || !t_->contains(key)) return Table(nullptr, name(key));
    const toml::node* n = t_->get(key);
    if (!n->is_table()) fail(n->source(), name(key) + " must be a table");
    return Table(n->as_table(), name(key));
  }

  double real(const std::string& key, double fallback, double lo, double hi, bool open_lo = false) {
    const toml::node* n = node(key);
    if (!n) return fallback;
    double v;
    if (auto d = n->value<double>()) v = *d;
    else fail(n->source(), name(key) + " must be a number");
    if (!std::isfinite(v) || v > hi || (open_lo ? v <= lo : v < lo)) {
      std::ostringstream os;
      os << name(key) << " = " << v << " is outside " << (open_lo ? "(" : "[") << lo << ", " << hi << "]";
      fail(n->source(), os.str());
    }
    return v;
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t lo, std::int64_t hi) {
    const toml::node* n = node(key);
    if (!n) return fallback;
    auto v = n->value_exact<std::int64_t>();
    if (!v) fail(n->source(), name(key) + " must be an integer");
    if (*v < lo || *v > hi)
      fail(n->source(), name(key) + " = " + std::to_string(*v) + " is outside [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
    return *v;
  }

  bool boolean(const std::string& key, bool fallback) {
    const toml::node* n = node(key);
    if (!n) return fallback;
    auto v = n->value_exact<bool>();
    if (!v) fail(n->source(), name(key) + " must be true or false");
    return *v;
  }

  std::string text(const std::string& key, const std::string& fallback, const std::vector<std::string>& allowed = {}) {
    const toml::node* n = node(key);
    if (!n) return fallback;
    auto v = n->value_exact<std::string>();
    if (!v) fail(n->source(), name(key) + " must be a string");
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), *v) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      fail(n->source(), name(key) + " = \"" + *v + "\" is not one of " + list);
    }
    return *v;
  }

  std::vector<double> reals(const std::string& key) {
    const toml::node* n = node(key);
    if (!n) return {};
    if (!n->is_array()) fail(n->source(), name(key) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : *n->as_array()) {
      auto d = e.value<double>();
      if (!d || !std::isfinite(*d)) fail(e.source(), name(key) + " must hold finite numbers");
      out.push_back(*d);
    }
    return out;
  }

  std::vector<std::vector<double>> rows(const std::string& key) {
    const toml::node* n = node(key);
    if (!n) return {};
    if (!n->is_array()) fail(n->source(), name(key) + " must be an array of arrays");
    std::vector<std::vector<double>> out;
    for (const auto& row : *n->as_array()) {
      if (!row.is_array()) fail(row.source(), name(key) + " must be an array of arrays");
      std::vector<double> r;
      for (const auto& e : *row.as_array()) {
        auto d = e.value<double>();
        if (!d || !std::isfinite(*d)) fail(e.source(), name(key) + " must hold finite numbers");
        r.push_back(*d);
      }
      out.push_back(std::move(r));
    }
    return out;
  }

  std::vector<std::string> texts(const std::string& key, const std::vector<std::string>& fallback,
                                 const std::vector<std::string>& allowed) {
    const toml::node* n = node(key);
    if (!n) return fallback;
    if (!n->is_array()) fail(n->source(), name(key) + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : *n->as_array()) {
      auto s = e.value_exact<std::string>();
      if (!s || std::find(allowed.begin(), allowed.end(), *s) == allowed.end())
        fail(e.source(), name(key) + " holds an unknown entry");
      out.push_back(*s);
    }
    return out;
  }

  const toml::array* array_of_tables(const std::string& key) {
    const toml::node* n = node(key);
    if (!n) return nullptr;
    if (!n->is_array_of_tables()) fail(n->source(), name(key) + " must be an array of tables");
    return n->as_array();
  }

  void reject_unknown() const {
    if (!t_) return;
    for (const auto& [k, v] : *t_)
      if (!seen_.count(std::string(k.str()))) fail(v.source(), "unknown key " + name(std::string(k.str())));
  }

 private:
  const toml::node* node(const std::string& key) {
    seen_.insert(key);
    return t_ ? t_->get(key) : nullptr;
  }
  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const toml::table* t_;
  std::string path_;
  std::set<std::string> seen_;
};

constexpr std::int64_t kMaxNodes = 20000;

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty()) continue;  // header
      throw Error(ErrorCode::ConfigError, path.string() + " line " + std::to_string(lineno) + ": not a number");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd read_column(const std::filesystem::path& path, std::size_t expected) {
  auto rows = read_numeric_csv(path);
  if (rows.size() != expected)
    throw Error(ErrorCode::ConfigError, path.string() + " has " + std::to_string(rows.size()) + " rows, expected " +
                                            std::to_string(expected));
  Eigen::VectorXd v(static_cast<Eigen::Index>(expected));
  for (std::size_t i = 0; i < expected; ++i) v[static_cast<Eigen::Index>(i)] = rows[i].back();
  return v;
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    fail(e.source(), std::string(e.description()));
  }
  RunConfig c;
  c.text = std::string(text);
  c.base_dir = base_dir;
  Table top(&root, "");

  c.seed = static_cast<std::uint64_t>(top.integer("seed", 0, 0, std::numeric_limits<std::int64_t>::max()));

  {
    Table t = top.sub("domain");
    if (!t.present()) throw Error(ErrorCode::ConfigError, "missing [domain] table");
    std::string kind = t.text("kind", "half_space", {"half_space", "ball"});
    c.domain_kind = kind == "ball" ? DomainKind::Ball : DomainKind::HalfSpace;
    c.dim = static_cast<int>(t.integer("dim", 3, 3, 16));
    c.alpha = t.real("alpha", 2.0, 0.0, 2.0, true);
    c.center = t.reals("center");
    c.radius = t.real("radius", 1.0, 0.0, 1e6, true);
    if (c.domain_kind == DomainKind::Ball) {
      if (c.center.empty()) c.center.assign(static_cast<std::size_t>(c.dim), 0.0);
      if (c.center.size() != static_cast<std::size_t>(c.dim))
        throw Error(ErrorCode::ConfigError, "domain.center must have dim entries");
    }
    t.reject_unknown();
  }
  {
    Table t = top.sub("a1");
    if (!t.present()) throw Error(ErrorCode::ConfigError, "missing [a1] table");
    std::string shape = t.text("shape", "disc_series", {"ball_interior", "disc_stack", "disc_series", "custom"});
    c.a1_nodes = static_cast<int>(t.integer("nodes", 500, 1, kMaxNodes));
    c.a1_margin = t.real("boundary_margin", 0.0, 0.0, 1e6);
    if (shape == "ball_interior") c.a1_shape = RunConfig::A1Shape::BallInterior;
    if (shape == "disc_series") {
      c.a1_shape = RunConfig::A1Shape::DiscSeries;
      c.disc_count = static_cast<int>(t.integer("count", 3, 1, 64));
    }
    if (shape == "disc_stack") {
      c.a1_shape = RunConfig::A1Shape::DiscStack;
      const toml::array* discs = t.array_of_tables("discs");
      if (!discs || discs->empty()) throw Error(ErrorCode::ConfigError, "a1.discs is required for disc_stack");
      int k = 0;
      for (const auto& e : *discs) {
        Table d(e.as_table(), "a1.discs[" + std::to_string(k++) + "]");
        Disc disc;
        disc.offset = d.real("offset", 0.0, -1e6, 1e6);
        disc.radius = d.real("radius", 1.0, 0.0, 1e6, true);
        disc.nodes = static_cast<int>(d.integer("nodes", 0, 0, kMaxNodes));
        d.reject_unknown();
        c.discs.push_back(disc);
      }
    }
    if (shape == "custom") {
      c.a1_shape = RunConfig::A1Shape::Custom;
      c.a1_points_file = t.text("points_file", "");
      if (c.a1_points_file.empty()) throw Error(ErrorCode::ConfigError, "a1.points_file is required for custom");
    }
    if (c.a1_shape == RunConfig::A1Shape::BallInterior && c.domain_kind != DomainKind::Ball)
      throw Error(ErrorCode::ConfigError, "a1.shape = ball_interior needs domain.kind = ball");
    if ((c.a1_shape == RunConfig::A1Shape::DiscStack || c.a1_shape == RunConfig::A1Shape::DiscSeries) &&
        c.domain_kind != DomainKind::HalfSpace)
      throw Error(ErrorCode::ConfigError, "disc plates need domain.kind = half_space");
    t.reject_unknown();
  }
  {
    Table t = top.sub("a2");
    c.a2_nodes = static_cast<int>(t.integer("nodes", 2000, 1, kMaxNodes));
    c.shell.outer_radius = t.real("outer_radius", 0.0, 0.0, 1e7);
    c.shell.inner_radius = t.real("inner_radius", 0.0, 0.0, 1e7);
    c.shell.core_radius = t.real("core_radius", 0.0, 0.0, 1e7);
    c.shell.layers = static_cast<int>(t.integer("layers", 0, 0, 64));
    c.shell.boundary_fraction = t.real("boundary_fraction", 0.0, 0.0, 1.0);
    c.shell.layer_growth = t.real("layer_growth", 0.0, 0.0, 100.0);
    t.reject_unknown();
  }
  {
    Table t = top.sub("constraint");
    std::string shape = t.text("shape", "disc_series", {"scaled_equilibrium", "disc_series", "weights_file"});
    if (shape == "scaled_equilibrium") c.constraint = RunConfig::ConstraintShape::ScaledEquilibrium;
    if (shape == "weights_file") c.constraint = RunConfig::ConstraintShape::WeightsFile;
    c.q = t.real("q", 2.0, 1.0, 1e6, true);
    c.weights_file = t.text("file", "");
    if (c.constraint == RunConfig::ConstraintShape::WeightsFile && c.weights_file.empty())
      throw Error(ErrorCode::ConfigError, "constraint.file is required for weights_file");
    if (c.constraint == RunConfig::ConstraintShape::DiscSeries && c.a1_shape != RunConfig::A1Shape::DiscSeries &&
        c.a1_shape != RunConfig::A1Shape::DiscStack)
      throw Error(ErrorCode::ConfigError, "constraint.shape = disc_series needs a disc plate");
    t.reject_unknown();
  }
  {
    Table t = top.sub("field");
    std::string kind = t.text("kind", "zero", {"zero", "case_one", "case_two"});
    if (kind == "case_one") {
      c.field = ProblemInputs::FieldKind::CaseI;
      c.field_values_file = t.text("values_file", "");
      if (c.field_values_file.empty()) throw Error(ErrorCode::ConfigError, "field.values_file is required for case_one");
    }
    if (kind == "case_two") {
      c.field = ProblemInputs::FieldKind::CaseII;
      c.zeta_points = t.rows("zeta_points");
      c.zeta_weights = t.reals("zeta_weights");
      if (c.zeta_points.empty() || c.zeta_points.size() != c.zeta_weights.size())
        throw Error(ErrorCode::ConfigError, "field.zeta_points and field.zeta_weights must be nonempty and match");
      for (const auto& p : c.zeta_points)
        if (p.size() != static_cast<std::size_t>(c.dim))
          throw Error(ErrorCode::ConfigError, "field.zeta_points rows must have dim entries");
      for (double w : c.zeta_weights)
        if (w < 0) throw Error(ErrorCode::ConfigError, "field.zeta_weights must be nonnegative");
    }
    t.reject_unknown();
  }
  {
    Table t = top.sub("solver");
    c.method = t.text("method", "bridge", {"bridge", "direct"});
    c.tol = t.real("tol", 1e-7, 0.0, 1e-2, true);
    c.max_iter = static_cast<int>(t.integer("max_iter", 20000, 1, 10000000));
    c.beta = t.real("beta", 0.54, 0.0, 10.0, true);
    c.block_iterations = static_cast<int>(t.integer("block_iterations", 6, 1, 1000));
    t.reject_unknown();
  }
  {
    Table t = top.sub("diagnostics");
    c.frostman = t.boolean("frostman", true);
    c.zone = t.boolean("zone", true);
    c.support = t.boolean("support", true);
    c.threshold = t.real("threshold", 0.02, 0.0, 1.0, true);
    c.probes = static_cast<int>(t.integer("probes", 1000, 1, 1000000));
    t.reject_unknown();
  }
  {
    Table t = top.sub("output");
    c.out_dir = t.text("directory", "out");
    c.formats = t.texts("formats", {"csv", "json"}, {"csv", "json"});
    t.reject_unknown();
  }
  top.reject_unknown();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) {
      std::string msg = e.what();
      const std::string prefix = std::string(to_string(ErrorCode::ConfigError)) + ": ";
      if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
      throw Error(ErrorCode::ConfigError, path.string() + ": " + msg);
    }
    throw;
  }
}

ProblemInputs build_inputs(const RunConfig& c) {
  Domain d;
  if (c.domain_kind == DomainKind::Ball) {
    Point centre = Eigen::Map<const Eigen::VectorXd>(c.center.data(), static_cast<Eigen::Index>(c.center.size()));
    d = Domain::ball(centre, c.radius, c.alpha);
  } else {
    d = Domain::half_space(c.dim, c.alpha);
  }
  ProblemInputs in;
  in.domain = d;
  in.rule = DiagonalRule{c.beta};
  in.qp.tol = c.tol;
  in.qp.max_iter = c.max_iter;

  PlateSpec s1;
  s1.which = Plate::A1;
  s1.node_count = c.a1_nodes;
  s1.boundary_margin = c.a1_margin;
  s1.seed = c.seed;
  switch (c.a1_shape) {
    case RunConfig::A1Shape::BallInterior: s1.shape = BallInterior{}; break;
    case RunConfig::A1Shape::DiscStack: s1.shape = DiscStack{c.discs}; break;
    case RunConfig::A1Shape::DiscSeries: {
      DiscStack st;
      for (int k = 1; k <= c.disc_count; ++k) st.discs.push_back(Disc{1.0 / k, static_cast<double>(k), 0});
      s1.shape = st;
      break;
    }
    case RunConfig::A1Shape::Custom: {
      Custom cu;
      for (const auto& row : read_numeric_csv(c.base_dir / c.a1_points_file)) {
        if (row.size() < static_cast<std::size_t>(c.dim))
          throw Error(ErrorCode::ConfigError, "a1.points_file rows need dim coordinates");
        // Use the last dim columns so an index column is allowed.
        Point p(c.dim);
        for (int j = 0; j < c.dim; ++j) p[j] = row[row.size() - static_cast<std::size_t>(c.dim) + static_cast<std::size_t>(j)];
        cu.points.push_back(p);
      }
      s1.shape = cu;
      s1.node_count = static_cast<int>(cu.points.size());
      break;
    }
  }
  in.a1 = discretize(d, s1);

  AnnulusOnBoundary shell = c.shell;
  if (shell.outer_radius == 0) {
    double diam = diameter(in.a1);
    if (d.kind == DomainKind::Ball) shell.outer_radius = d.radius + kTruncationFactor * std::max(diam, d.radius);
    else shell.outer_radius = kTruncationFactor * std::max(diam, 1.0);
  }
  in.truncation_radius = shell.outer_radius;
  PlateSpec s2;
  s2.which = Plate::A2;
  s2.shape = shell;
  s2.node_count = c.a2_nodes;
  s2.seed = c.seed;
  in.a2 = discretize(d, s2);

  switch (c.constraint) {
    case RunConfig::ConstraintShape::ScaledEquilibrium:
      in.xi = constraint_scaled_equilibrium(in.a1, c.alpha, c.q, in.rule);
      break;
    case RunConfig::ConstraintShape::DiscSeries: in.xi = constraint_disc_series(in.a1, c.alpha, in.rule); break;
    case RunConfig::ConstraintShape::WeightsFile:
      in.xi = read_column(c.base_dir / c.weights_file, in.a1.size());
      break;
  }

  in.field = c.field;
  if (c.field == ProblemInputs::FieldKind::CaseI)
    in.field_values = read_column(c.base_dir / c.field_values_file, in.a1.size());
  if (c.field == ProblemInputs::FieldKind::CaseII) {
    in.zeta_points.resize(static_cast<Eigen::Index>(c.zeta_points.size()), c.dim);
    for (std::size_t k = 0; k < c.zeta_points.size(); ++k)
      for (int j = 0; j < c.dim; ++j) in.zeta_points(static_cast<Eigen::Index>(k), j) = c.zeta_points[k][static_cast<std::size_t>(j)];
    in.zeta_weights = Eigen::Map<const Eigen::VectorXd>(c.zeta_weights.data(), static_cast<Eigen::Index>(c.zeta_weights.size()));
  }
  return in;
}

std::string sha256_hex(std::string_view text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::IoError, "SHA-256 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

}  // namespace condenser
