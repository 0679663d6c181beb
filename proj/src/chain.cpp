#include "dynperc/chain.hpp"

#include <cmath>
#include "json.hpp"

#include "dynperc/error.hpp"

namespace dynperc {

namespace {

SparseMatrix assemble(std::size_t n, const std::vector<Triplet>& entries) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.row >= n || e.col >= n) fail(ErrorCode::kOutOfRange, "chain entry index out of range");
    if (!std::isfinite(e.value)) fail(ErrorCode::kInvalidArgument, "chain entry is not finite");
    t.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col), e.value);
  }
  SparseMatrix m(static_cast<int>(n), static_cast<int>(n));
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

}  // namespace

ChainSpec::ChainSpec(ChainKind kind, std::size_t states, const std::vector<Triplet>& entries,
                     std::vector<double> stationary, bool reversible)
    : kind_(kind),
      states_(states),
      matrix_(assemble(states, entries)),
      stationary_(std::move(stationary)),
      reversible_(reversible) {
  validate();
}

ChainSpec ChainSpec::with_solved_stationary(ChainKind kind, std::size_t states,
                                            const std::vector<Triplet>& entries) {
  SparseMatrix m = assemble(states, entries);
  Eigen::MatrixXd rate(m);
  if (kind == ChainKind::kTransition) rate -= Eigen::MatrixXd::Identity(states, states);
  auto pi = solve_stationary(rate);
  ChainSpec probe(kind, states, entries, pi, false);
  const bool rev = detailed_balance_residual(probe) <= kTolerance;
  return ChainSpec(kind, states, entries, std::move(pi), rev);
}

void ChainSpec::validate() const {
  if (states_ == 0) fail(ErrorCode::kInvalidArgument, "chain has no states");
  if (stationary_.size() != states_) {
    fail(ErrorCode::kInvalidArgument, "stationary vector length does not match state count");
  }
  const double target = kind_ == ChainKind::kGenerator ? 0.0 : 1.0;
  for (int x = 0; x < matrix_.outerSize(); ++x) {
    double row = 0.0;
    double scale = 1.0;
    for (SparseMatrix::InnerIterator it(matrix_, x); it; ++it) {
      row += it.value();
      scale = std::max(scale, std::abs(it.value()));
      const bool diag = it.col() == x;
      if (it.value() < 0.0 && (!diag || kind_ == ChainKind::kTransition)) {
        fail(ErrorCode::kInvalidArgument, "negative off-diagonal rate or probability");
      }
    }
    if (std::abs(row - target) > kTolerance * scale) {
      fail(ErrorCode::kInvalidArgument,
           "row " + std::to_string(x) + " does not sum to " + std::to_string(target));
    }
  }
  double total = 0.0;
  for (double w : stationary_) {
    if (!(w > 0.0)) fail(ErrorCode::kNotIrreducible, "stationary weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > kTolerance) {
    fail(ErrorCode::kInvalidArgument, "stationary weights do not sum to 1");
  }
  if (stationarity_residual(*this) > kTolerance) {
    fail(ErrorCode::kInvalidArgument, "stationary vector is not invariant");
  }
  if (reversible_ && detailed_balance_residual(*this) > kTolerance) {
    fail(ErrorCode::kNotReversible, "chain flagged reversible violates detailed balance");
  }
}

Eigen::MatrixXd ChainSpec::generator_dense() const {
  Eigen::MatrixXd g(matrix_);
  if (kind_ == ChainKind::kTransition) g -= Eigen::MatrixXd::Identity(states_, states_);
  return g;
}

SparseMatrix ChainSpec::generator_sparse() const {
  if (kind_ == ChainKind::kGenerator) return matrix_;
  SparseMatrix id(static_cast<int>(states_), static_cast<int>(states_));
  id.setIdentity();
  SparseMatrix g = matrix_ - id;
  g.makeCompressed();
  return g;
}

std::vector<Triplet> ChainSpec::triplets() const {
  std::vector<Triplet> out;
  out.reserve(matrix_.nonZeros());
  for (int x = 0; x < matrix_.outerSize(); ++x)
    for (SparseMatrix::InnerIterator it(matrix_, x); it; ++it)
      out.push_back({static_cast<std::size_t>(x), static_cast<std::size_t>(it.col()), it.value()});
  return out;
}

std::vector<double> solve_stationary(const Eigen::MatrixXd& rate) {
  const Eigen::Index n = rate.rows();
  // Replace one balance equation by the normalisation constraint.
  Eigen::MatrixXd a = rate.transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) fail(ErrorCode::kNotIrreducible, "stationary system is singular");
  Eigen::VectorXd pi = lu.solve(b);
  pi /= pi.sum();
  return {pi.data(), pi.data() + n};
}

double stationarity_residual(const ChainSpec& c) {
  const SparseMatrix g = c.generator_sparse();
  Eigen::Map<const Eigen::VectorXd> pi(c.stationary().data(), c.states());
  Eigen::VectorXd r = g.transpose() * pi;
  return r.cwiseAbs().maxCoeff();
}

double detailed_balance_residual(const ChainSpec& c) {
  const SparseMatrix& m = c.matrix();
  const auto& pi = c.stationary();
  double worst = 0.0;
  for (int x = 0; x < m.outerSize(); ++x) {
    for (SparseMatrix::InnerIterator it(m, x); it; ++it) {
      const auto y = it.col();
      if (y == x) continue;
      const double back = m.coeff(y, x);
      worst = std::max(worst, std::abs(pi[x] * it.value() - pi[y] * back));
    }
  }
  return worst;
}

std::string chain_to_json(const ChainSpec& c) {
  nlohmann::json j;
  j["states"] = c.states();
  j["kind"] = c.continuous() ? "generator" : "transition";
  auto& t = j["triplets"] = nlohmann::json::array();
  for (const auto& e : c.triplets()) t.push_back({e.row, e.col, e.value});
  j["pi"] = c.stationary();
  j["reversible"] = c.reversible();
  return j.dump();
}

ChainSpec chain_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kIoError, std::string("chain JSON: ") + e.what());
  }
  try {
    const auto n = j.at("states").get<std::size_t>();
    const auto kind_name = j.at("kind").get<std::string>();
    ChainKind kind;
    if (kind_name == "generator") {
      kind = ChainKind::kGenerator;
    } else if (kind_name == "transition") {
      kind = ChainKind::kTransition;
    } else {
      fail(ErrorCode::kInvalidArgument, "chain JSON: unknown kind '" + kind_name + "'");
    }
    std::vector<Triplet> entries;
    for (const auto& t : j.at("triplets")) {
      entries.push_back({t.at(0).get<std::size_t>(), t.at(1).get<std::size_t>(),
                         t.at(2).get<double>()});
    }
    auto pi = j.at("pi").get<std::vector<double>>();
    bool rev;
    if (j.contains("reversible")) {
      rev = j["reversible"].get<bool>();
    } else {
      ChainSpec probe(kind, n, entries, pi, false);
      rev = detailed_balance_residual(probe) <= ChainSpec::kTolerance;
    }
    return ChainSpec(kind, n, entries, std::move(pi), rev);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kIoError, std::string("chain JSON: ") + e.what());
  }
}

}  // namespace dynperc
