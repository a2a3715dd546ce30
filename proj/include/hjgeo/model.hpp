#pragma once

/// ModelSpec: one self-contained description of a homogeneous-space model --
/// structure constants, frame metric G_ij, invariant frame, optional Killing
/// fields, base point, orbit parametrization lambda(j), polarization basis,
/// canonical chart (zeta, chi, phi), and per-variable sampling boxes.
///
/// Models are authored as JSON documents (`.model` files, schema in
/// docs/model_format.md) with every mathematical entry a DSL string that may
/// reference the model's named constants; `builtin()` provides the two
/// bundled fixtures ("mtt", "flat4") through the same construction path.
/// Loading performs structural (shape) validation with errors naming the
/// offending field; `validate_all()` runs the full numeric check battery.
///
/// Index convention: structure-constant triples are 1-based in the file
/// format and 0-based everywhere in the C++ API.

#include <Eigen/Dense>

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hjgeo/box.hpp"
#include "hjgeo/chart.hpp"
#include "hjgeo/expr.hpp"
#include "hjgeo/frame.hpp"
#include "hjgeo/lie_algebra.hpp"
#include "hjgeo/report.hpp"
#include "hjgeo/rng.hpp"

namespace hjgeo {

/// Malformed model document; the message names the offending field.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline const nlohmann::json& require_key(const nlohmann::json& obj,
                                         const char* key,
                                         const std::string& context) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ModelError("model field \"" + context + "\" is missing");
  }
  return obj.at(key);
}

inline int require_int(const nlohmann::json& obj, const char* key,
                       const std::string& context) {
  const auto& value = require_key(obj, key, context);
  if (!value.is_number_integer()) {
    throw ModelError("model field \"" + context + "\" must be an integer");
  }
  return value.get<int>();
}

inline Expr parse_model_expr(const nlohmann::json& value,
                             const std::string& field) {
  if (value.is_number()) {
    return Expr::constant(value.get<double>());
  }
  if (!value.is_string()) {
    throw ModelError("model field \"" + field +
                     "\" must be a number or a DSL string");
  }
  try {
    return Expr::parse(value.get<std::string>());
  } catch (const ParseError& err) {
    throw ModelError("model field \"" + field + "\": " + err.what());
  }
}

inline std::vector<Expr> parse_expr_vector(const nlohmann::json& value,
                                           int count,
                                           const std::string& field) {
  if (!value.is_array() || static_cast<int>(value.size()) != count) {
    throw ModelError("model field \"" + field + "\" must be an array of " +
                     std::to_string(count) + " entries");
  }
  std::vector<Expr> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out.push_back(parse_model_expr(value.at(static_cast<std::size_t>(i)),
                                   field + "[" + std::to_string(i + 1) + "]"));
  }
  return out;
}

inline std::vector<std::vector<Expr>> parse_expr_matrix(
    const nlohmann::json& value, int rows, int cols, const std::string& field) {
  if (!value.is_array() || static_cast<int>(value.size()) != rows) {
    throw ModelError("model field \"" + field + "\" must have " +
                     std::to_string(rows) + " rows");
  }
  std::vector<std::vector<Expr>> out;
  out.reserve(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) {
    const auto& row = value.at(static_cast<std::size_t>(i));
    const std::string row_field = field + "[" + std::to_string(i + 1) + "]";
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      throw ModelError("model field \"" + row_field + "\" must have " +
                       std::to_string(cols) + " column(s)");
    }
    out.push_back(parse_expr_vector(row, cols, row_field));
  }
  return out;
}

inline double constant_value(const Expr& expr,
                             const Bindings& constants,
                             const std::string& field) {
  try {
    return expr.substitute(constants).eval({});
  } catch (const std::exception& err) {
    throw ModelError("model field \"" + field +
                     "\" must reduce to a constant: " + err.what());
  }
}

inline Box parse_box(const nlohmann::json& value, int count,
                     const std::string& field) {
  if (!value.is_array() || static_cast<int>(value.size()) != count) {
    throw ModelError("model field \"" + field + "\" must list " +
                     std::to_string(count) + " interval(s)");
  }
  Box box;
  for (int i = 0; i < count; ++i) {
    const auto& pair = value.at(static_cast<std::size_t>(i));
    const std::string entry = field + "[" + std::to_string(i + 1) + "]";
    if (!pair.is_array() || pair.size() != 2 || !pair.at(0).is_number() ||
        !pair.at(1).is_number()) {
      throw ModelError("model field \"" + entry + "\" must be [lo, hi]");
    }
    const double lo = pair.at(0).get<double>();
    const double hi = pair.at(1).get<double>();
    if (!(lo <= hi)) {
      throw ModelError("model field \"" + entry + "\" has lo > hi");
    }
    box.push_back(Interval{lo, hi});
  }
  return box;
}

inline std::vector<std::vector<Expr>> substitute_matrix(
    const std::vector<std::vector<Expr>>& exprs, const Bindings& constants) {
  std::vector<std::vector<Expr>> out;
  out.reserve(exprs.size());
  for (const auto& row : exprs) {
    std::vector<Expr> srow;
    srow.reserve(row.size());
    for (const Expr& e : row) srow.push_back(e.substitute(constants));
    out.push_back(std::move(srow));
  }
  return out;
}

inline std::vector<Expr> substitute_vector(const std::vector<Expr>& exprs,
                                           const Bindings& constants) {
  std::vector<Expr> out;
  out.reserve(exprs.size());
  for (const Expr& e : exprs) out.push_back(e.substitute(constants));
  return out;
}

}  // namespace detail

/// One structure-constant entry as authored (0-based indices here).
struct StructureEntry {
  int i = 0;
  int j = 0;
  int k = 0;
  Expr value = Expr::constant(0.0);
};

class ModelSpec {
 public:
  explicit ModelSpec(const nlohmann::json& doc) { build(doc); }

  /// Parses a `.model` file.  With `strict`, additionally runs the numeric
  /// validation battery and throws ModelError listing any failing check.
  static ModelSpec load(const std::string& path, bool strict = false);

  /// In-memory fixtures "mtt" (curved, free parameter k) and "flat4"
  /// (abelian, identity frame).  `overrides` may re-assign existing named
  /// constants only.
  static ModelSpec builtin(const std::string& name,
                           const std::map<std::string, double>& overrides = {});

  const std::string& name() const { return name_; }
  int n() const { return n_; }
  int r() const { return r_; }
  int s() const { return s_; }
  const std::map<std::string, double>& constants() const { return constants_; }
  double constant(const std::string& key) const {
    const auto it = constants_.find(key);
    if (it == constants_.end()) {
      throw std::out_of_range("model has no constant named \"" + key + "\"");
    }
    return it->second;
  }

  const StructureConstants& structure() const { return *structure_; }
  const FrameMetric& metric() const { return *metric_; }
  const FrameField& frame() const { return *frame_; }
  bool has_killing() const { return killing_.has_value(); }
  const KillingSet& killing() const {
    if (!killing_) throw std::logic_error("model has no killing fields");
    return *killing_;
  }
  const Eigen::VectorXd& base_point() const { return base_point_; }
  const OrbitParametrization& orbit() const { return *orbit_; }
  /// Polarization basis, one subalgebra generator per row.
  const Eigen::MatrixXd& polarization_basis() const { return polarization_; }
  const CanonicalChart& chart() const { return *chart_; }

  const Box& x_box() const { return x_box_; }
  const Box& q_box() const { return q_box_; }
  const Box& p_box() const { return p_box_; }
  const Box& j_box() const { return j_box_; }
  Interval m_range() const { return m_range_; }
  /// Scalar chart window (r = 1 only).
  Interval q_window() const {
    if (r_ != 1) {
      throw std::logic_error("q_window is defined for r = 1 charts only");
    }
    return q_box_[0];
  }

  /// Serializes the spec back to its document form (expressions via the
  /// DSL's printer, constants unsubstituted).
  nlohmann::json to_json() const;
  void save(const std::string& path) const;

 private:
  void build(const nlohmann::json& doc);

  std::string name_;
  int n_ = 0;
  int r_ = 0;
  int s_ = 0;
  std::map<std::string, double> constants_;
  std::vector<StructureEntry> structure_entries_;
  std::vector<std::vector<Expr>> frame_metric_exprs_;
  std::vector<std::vector<Expr>> frame_exprs_;
  std::optional<std::vector<std::vector<Expr>>> killing_exprs_;
  Eigen::VectorXd base_point_;
  std::vector<Expr> lambda_exprs_;
  Eigen::MatrixXd polarization_;
  std::vector<std::vector<Expr>> zeta_exprs_;
  std::vector<Expr> chi_exprs_;
  std::vector<Expr> phi_exprs_;
  Box x_box_;
  Box q_box_;
  Box p_box_;
  Box j_box_;
  Interval m_range_{0.5, 1.5};

  std::optional<StructureConstants> structure_;
  std::optional<FrameMetric> metric_;
  std::optional<FrameField> frame_;
  std::optional<KillingSet> killing_;
  std::optional<OrbitParametrization> orbit_;
  std::optional<CanonicalChart> chart_;
};

inline void ModelSpec::build(const nlohmann::json& doc) {
  using detail::require_key;

  if (!doc.is_object()) {
    throw ModelError("model document must be a JSON object");
  }
  const auto& name = require_key(doc, "name", "name");
  if (!name.is_string()) throw ModelError("model field \"name\" must be a string");
  name_ = name.get<std::string>();
  n_ = detail::require_int(doc, "dimension", "dimension");
  if (n_ < 1) throw ModelError("model field \"dimension\" must be positive");

  if (doc.contains("constants")) {
    const auto& consts = doc.at("constants");
    if (!consts.is_object()) {
      throw ModelError("model field \"constants\" must be an object");
    }
    for (const auto& [key, value] : consts.items()) {
      if (!value.is_number()) {
        throw ModelError("model field \"constants." + key +
                         "\" must be a number");
      }
      constants_[key] = value.get<double>();
    }
  }
  Bindings bindings;
  for (const auto& [key, value] : constants_) bindings[key] = value;

  // Structure constants: sparse 1-based triples with constant-expression
  // values.
  const auto& structure = require_key(doc, "structure", "structure");
  if (!structure.is_array()) {
    throw ModelError("model field \"structure\" must be an array");
  }
  structure_ = StructureConstants(n_);
  for (std::size_t e = 0; e < structure.size(); ++e) {
    const std::string field = "structure[" + std::to_string(e + 1) + "]";
    const auto& entry = structure.at(e);
    if (!entry.is_array() || entry.size() != 4) {
      throw ModelError("model field \"" + field + "\" must be [i, j, k, value]");
    }
    StructureEntry se;
    for (int slot = 0; slot < 3; ++slot) {
      const auto& idx = entry.at(static_cast<std::size_t>(slot));
      if (!idx.is_number_integer() || idx.get<int>() < 1 ||
          idx.get<int>() > n_) {
        throw ModelError("model field \"" + field +
                         "\" has an index outside 1.." + std::to_string(n_));
      }
    }
    se.i = entry.at(0).get<int>() - 1;
    se.j = entry.at(1).get<int>() - 1;
    se.k = entry.at(2).get<int>() - 1;
    se.value = detail::parse_model_expr(entry.at(3), field + ".value");
    structure_entries_.push_back(se);
    const double value =
        detail::constant_value(se.value, bindings, field + ".value");
    structure_->set_antisymmetric(se.i, se.j, se.k, value);
  }

  // Constant frame metric.
  frame_metric_exprs_ = detail::parse_expr_matrix(
      require_key(doc, "frame_metric", "frame_metric"), n_, n_,
      "frame_metric");
  {
    Eigen::MatrixXd g(n_, n_);
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        g(i, j) = detail::constant_value(
            frame_metric_exprs_[static_cast<std::size_t>(i)]
                               [static_cast<std::size_t>(j)],
            bindings,
            "frame_metric[" + std::to_string(i + 1) + "][" +
                std::to_string(j + 1) + "]");
      }
    }
    try {
      metric_ = FrameMetric(g);
    } catch (const std::invalid_argument& err) {
      throw ModelError(std::string("model field \"frame_metric\": ") +
                       err.what());
    }
  }

  // Frame and optional Killing fields.
  frame_exprs_ = detail::parse_expr_matrix(require_key(doc, "frame", "frame"),
                                           n_, n_, "frame");
  try {
    frame_ = FrameField(detail::substitute_matrix(frame_exprs_, bindings));
  } catch (const std::exception& err) {
    throw ModelError(std::string("model field \"frame\": ") + err.what());
  }
  if (doc.contains("killing")) {
    killing_exprs_ = detail::parse_expr_matrix(doc.at("killing"), n_, n_,
                                               "killing");
    try {
      killing_ =
          KillingSet(detail::substitute_matrix(*killing_exprs_, bindings));
    } catch (const std::exception& err) {
      throw ModelError(std::string("model field \"killing\": ") + err.what());
    }
  }

  // Base point.
  {
    const auto& base = require_key(doc, "base_point", "base_point");
    if (!base.is_array() || static_cast<int>(base.size()) != n_) {
      throw ModelError("model field \"base_point\" must list " +
                       std::to_string(n_) + " coordinates");
    }
    base_point_.resize(n_);
    for (int i = 0; i < n_; ++i) {
      const auto& v = base.at(static_cast<std::size_t>(i));
      if (!v.is_number()) {
        throw ModelError("model field \"base_point[" + std::to_string(i + 1) +
                         "]\" must be a number");
      }
      base_point_[i] = v.get<double>();
    }
  }

  // Orbit parametrization.
  {
    const auto& orbit = require_key(doc, "orbit", "orbit");
    s_ = detail::require_int(orbit, "s", "orbit.s");
    if (s_ < 0 || s_ > n_) {
      throw ModelError("model field \"orbit.s\" must lie in 0.." +
                       std::to_string(n_));
    }
    lambda_exprs_ = detail::parse_expr_vector(
        require_key(orbit, "lambda", "orbit.lambda"), n_, "orbit.lambda");
    try {
      orbit_ = OrbitParametrization(
          s_, detail::substitute_vector(lambda_exprs_, bindings));
    } catch (const std::exception& err) {
      throw ModelError(std::string("model field \"orbit.lambda\": ") +
                       err.what());
    }
  }

  // Chart; the orbit dimension n - s fixes r.
  {
    const auto& chart = require_key(doc, "chart", "chart");
    r_ = detail::require_int(chart, "r", "chart.r");
    if (n_ - s_ != 2 * r_) {
      throw ModelError(
          "model field \"chart.r\" is inconsistent: dimension - orbit.s = " +
          std::to_string(n_ - s_) + " must equal 2 r = " +
          std::to_string(2 * r_));
    }
    zeta_exprs_ = detail::parse_expr_matrix(
        require_key(chart, "zeta", "chart.zeta"), n_, r_, "chart.zeta");
    chi_exprs_ = detail::parse_expr_vector(
        require_key(chart, "chi", "chart.chi"), n_, "chart.chi");
    phi_exprs_ = detail::parse_expr_vector(
        require_key(chart, "phi", "chart.phi"), r_, "chart.phi");
    try {
      chart_ = CanonicalChart(r_, s_,
                              detail::substitute_matrix(zeta_exprs_, bindings),
                              detail::substitute_vector(chi_exprs_, bindings),
                              detail::substitute_vector(phi_exprs_, bindings));
    } catch (const std::exception& err) {
      throw ModelError(std::string("model field \"chart\": ") + err.what());
    }
  }

  // Polarization basis: dim h = n - r rows of n numeric components.
  {
    const auto& pol = require_key(doc, "polarization", "polarization");
    const int h_dim = n_ - r_;
    if (!pol.is_array() || static_cast<int>(pol.size()) != h_dim) {
      throw ModelError("model field \"polarization\" must list " +
                       std::to_string(h_dim) + " basis vectors");
    }
    polarization_.resize(h_dim, n_);
    for (int row = 0; row < h_dim; ++row) {
      const std::string field =
          "polarization[" + std::to_string(row + 1) + "]";
      const auto& vec = pol.at(static_cast<std::size_t>(row));
      if (!vec.is_array() || static_cast<int>(vec.size()) != n_) {
        throw ModelError("model field \"" + field + "\" must list " +
                         std::to_string(n_) + " components");
      }
      for (int col = 0; col < n_; ++col) {
        polarization_(row, col) = detail::constant_value(
            detail::parse_model_expr(vec.at(static_cast<std::size_t>(col)),
                                     field),
            bindings, field);
      }
    }
  }

  // Sampling boxes (defaults: unit boxes; m in [0.5, 1.5]).
  {
    nlohmann::json boxes = nlohmann::json::object();
    if (doc.contains("sample_box")) {
      boxes = doc.at("sample_box");
      if (!boxes.is_object()) {
        throw ModelError("model field \"sample_box\" must be an object");
      }
    }
    x_box_ = boxes.contains("x")
                 ? detail::parse_box(boxes.at("x"), n_, "sample_box.x")
                 : unit_box(n_);
    q_box_ = boxes.contains("q")
                 ? detail::parse_box(boxes.at("q"), r_, "sample_box.q")
                 : unit_box(r_);
    p_box_ = boxes.contains("p")
                 ? detail::parse_box(boxes.at("p"), r_, "sample_box.p")
                 : unit_box(r_);
    j_box_ = boxes.contains("j")
                 ? detail::parse_box(boxes.at("j"), s_, "sample_box.j")
                 : unit_box(s_);
    if (boxes.contains("m")) {
      const Box m_box = detail::parse_box(
          nlohmann::json::array({boxes.at("m")}), 1, "sample_box.m");
      m_range_ = m_box[0];
    }
  }
}

/// Full numeric validation battery: algebra structure and index, the
/// polarization conditions at a sampled lambda(j), frame bracket closure and
/// metric constancy, optional Killing checks, the chart conditions, and phi
/// equivariance.  Check names are prefixed by their family.
inline Report validate_all(const ModelSpec& spec, int samples,
                           std::uint64_t seed) {
  Report total;
  const StructureConstants& c = spec.structure();

  total.merge(validate_structure(c), "algebra/");
  total.add_flag("algebra/index-matches-s",
                 lie_index(c, 25, seed) == spec.s(),
                 "minimal Lie-Poisson corank vs orbit.s = " +
                     std::to_string(spec.s()));

  {
    Rng rng(seed, 99);
    const Eigen::VectorXd j = sample_box(spec.j_box(), rng);
    Subalgebra h;
    h.basis = spec.polarization_basis();
    const int orbit_dim = spec.n() - spec.s();
    const auto pol =
        check_polarization(c, h, spec.orbit().lambda(j), orbit_dim);
    total.merge(pol.report, "polarization/");
  }

  total.merge(verify_frame(spec.frame(), c, samples, seed, spec.x_box()),
              "frame/");
  total.add("frame/metric-constancy",
            metric_constancy_residual(spec.frame(), spec.metric(), samples,
                                      seed, spec.x_box()),
            1e-10);
  if (spec.has_killing()) {
    total.merge(verify_killing(spec.killing(), spec.frame(), c, samples, seed,
                               spec.x_box()),
                "killing/");
  }

  total.merge(verify_chart(spec.chart(), spec.orbit(), c, samples, seed,
                           spec.q_box(), spec.p_box(), spec.j_box()),
              "chart/");
  total.merge(verify_equivariance(spec.chart(), spec.frame(),
                                  spec.base_point(), samples, seed,
                                  spec.x_box(), spec.q_box()),
              "chart/");
  return total;
}

inline ModelSpec ModelSpec::load(const std::string& path, bool strict) {
  std::ifstream in(path);
  if (!in) {
    throw ModelError("cannot open model file: " + path);
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& err) {
    throw ModelError("model file " + path + ": " + err.what());
  }
  ModelSpec spec(doc);
  if (strict) {
    const Report report = validate_all(spec, 50, 0);
    if (!report.all_pass()) {
      std::ostringstream failures;
      for (const auto& check : report.checks()) {
        if (!check.pass) failures << " " << check.name;
      }
      throw ModelError("model file " + path +
                       " failed strict validation:" + failures.str());
    }
  }
  return spec;
}

inline ModelSpec ModelSpec::builtin(
    const std::string& name, const std::map<std::string, double>& overrides) {
  nlohmann::json doc;
  if (name == "mtt") {
    doc = {
        {"name", "mtt"},
        {"dimension", 4},
        {"constants", {{"k", 1.0}}},
        {"structure",
         {{2, 3, 1, "k"}, {2, 4, 2, "-k/2"}, {3, 4, 3, "k/2"}}},
        {"frame_metric",
         {{1, 0, 0, -1}, {0, -1, 0, 0}, {0, 0, -1, 0}, {-1, 0, 0, 0}}},
        {"frame",
         {{"-1", "0", "0", "0"},
          {"-k*x3*exp(-k*x2/2)", "0", "0", "-exp(-k*x2/2)"},
          {"0", "0", "-exp(k*x2/2)", "0"},
          {"2", "-1", "0", "0"}}},
        {"killing",
         {{"1", "0", "0", "0"},
          {"0", "0", "0", "1"},
          {"k*x4", "0", "1", "0"},
          {"-2", "1", "(k/2)*x3", "-(k/2)*x4"}}},
        {"base_point", {0, 0, 0, 0}},
        {"orbit", {{"s", 2}, {"lambda", {"j1", "0", "0", "j2"}}}},
        {"polarization", {{1, 0, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}},
        {"chart",
         {{"r", 1},
          {"zeta", {{"0"}, {"1"}, {"0"}, {"-(k/2)*q1"}}},
          {"chi", {"j1", "0", "k*j1*q1", "j2"}},
          {"phi", {"exp(k*x2/2)*(q1 - x4)"}}}},
        {"sample_box",
         {{"x", {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}}},
          {"q", {{-4, 4}}},
          {"p", {{-1, 1}}},
          {"j", {{0.5, 1.5}, {-1.5, -0.5}}},
          {"m", {0.05, 0.75}}}},
    };
  } else if (name == "flat4") {
    doc = {
        {"name", "flat4"},
        {"dimension", 4},
        {"constants", nlohmann::json::object()},
        {"structure", nlohmann::json::array()},
        {"frame_metric",
         {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}},
        {"frame",
         {{"1", "0", "0", "0"},
          {"0", "1", "0", "0"},
          {"0", "0", "1", "0"},
          {"0", "0", "0", "1"}}},
        {"killing",
         {{"1", "0", "0", "0"},
          {"0", "1", "0", "0"},
          {"0", "0", "1", "0"},
          {"0", "0", "0", "1"}}},
        {"base_point", {0, 0, 0, 0}},
        {"orbit", {{"s", 4}, {"lambda", {"j1", "j2", "j3", "j4"}}}},
        {"polarization",
         {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}},
        {"chart",
         {{"r", 0},
          {"zeta",
           {nlohmann::json::array(), nlohmann::json::array(),
            nlohmann::json::array(), nlohmann::json::array()}},
          {"chi", {"j1", "j2", "j3", "j4"}},
          {"phi", nlohmann::json::array()}}},
        {"sample_box",
         {{"x", {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}}},
          {"q", nlohmann::json::array()},
          {"p", nlohmann::json::array()},
          {"j", {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}}},
          {"m", {0.5, 1.5}}}},
    };
  } else {
    throw ModelError("unknown builtin model \"" + name + "\"");
  }

  if (!overrides.empty()) {
    auto& consts = doc.at("constants");
    for (const auto& [key, value] : overrides) {
      if (!consts.contains(key)) {
        throw ModelError("model \"" + name + "\" has no constant named \"" +
                         key + "\"");
      }
      consts[key] = value;
    }
  }
  return ModelSpec(doc);
}

inline nlohmann::json ModelSpec::to_json() const {
  nlohmann::json doc;
  doc["name"] = name_;
  doc["dimension"] = n_;
  doc["constants"] = nlohmann::json::object();
  for (const auto& [key, value] : constants_) doc["constants"][key] = value;

  doc["structure"] = nlohmann::json::array();
  for (const auto& entry : structure_entries_) {
    doc["structure"].push_back(nlohmann::json::array(
        {entry.i + 1, entry.j + 1, entry.k + 1, entry.value.str()}));
  }

  const auto matrix_to_json = [](const std::vector<std::vector<Expr>>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& row : rows) {
      nlohmann::json jrow = nlohmann::json::array();
      for (const Expr& e : row) jrow.push_back(e.str());
      out.push_back(jrow);
    }
    return out;
  };
  const auto vector_to_json = [](const std::vector<Expr>& entries) {
    nlohmann::json out = nlohmann::json::array();
    for (const Expr& e : entries) out.push_back(e.str());
    return out;
  };
  const auto box_to_json = [](const Box& box) {
    nlohmann::json out = nlohmann::json::array();
    for (const Interval& iv : box) {
      out.push_back(nlohmann::json::array({iv.lo, iv.hi}));
    }
    return out;
  };

  doc["frame_metric"] = matrix_to_json(frame_metric_exprs_);
  doc["frame"] = matrix_to_json(frame_exprs_);
  if (killing_exprs_) doc["killing"] = matrix_to_json(*killing_exprs_);

  doc["base_point"] = nlohmann::json::array();
  for (int i = 0; i < n_; ++i) doc["base_point"].push_back(base_point_[i]);

  doc["orbit"] = {{"s", s_}, {"lambda", vector_to_json(lambda_exprs_)}};

  doc["polarization"] = nlohmann::json::array();
  for (int row = 0; row < polarization_.rows(); ++row) {
    nlohmann::json jrow = nlohmann::json::array();
    for (int col = 0; col < n_; ++col) jrow.push_back(polarization_(row, col));
    doc["polarization"].push_back(jrow);
  }

  doc["chart"] = {{"r", r_},
                  {"zeta", matrix_to_json(zeta_exprs_)},
                  {"chi", vector_to_json(chi_exprs_)},
                  {"phi", vector_to_json(phi_exprs_)}};

  doc["sample_box"] = {{"x", box_to_json(x_box_)},
                       {"q", box_to_json(q_box_)},
                       {"p", box_to_json(p_box_)},
                       {"j", box_to_json(j_box_)},
                       {"m", nlohmann::json::array({m_range_.lo,
                                                    m_range_.hi})}};
  return doc;
}

inline void ModelSpec::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) {
    throw ModelError("cannot write model file: " + path);
  }
  out << to_json().dump(2) << "\n";
}

}  // namespace hjgeo
