#include "rdgcc/affine_lmi.hpp"

#include "rdgcc/linalg.hpp"

#include <numeric>
#include <stdexcept>

namespace rdgcc {

Eigen::MatrixXd VariableDecl::basis(Eigen::Index p) const {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(rows, cols);
  if (!symmetric()) {
    e(p % rows, p / rows) = 1.0;
    return e;
  }
  // Column-major upper triangle: (0,0), (0,1), (1,1), (0,2), ...
  Eigen::Index col = 0;
  while ((col + 1) * (col + 2) / 2 <= p) ++col;
  const Eigen::Index row = p - col * (col + 1) / 2;
  e(row, col) = 1.0;
  e(col, row) = 1.0;
  return e;
}

Eigen::VectorXd VariableDecl::vectorize(const Eigen::MatrixXd& value) const {
  Eigen::VectorXd out(dof());
  if (!symmetric()) {
    out = Eigen::Map<const Eigen::VectorXd>(value.data(), rows * cols);
    return out;
  }
  Eigen::Index p = 0;
  for (Eigen::Index c = 0; c < rows; ++c)
    for (Eigen::Index r = 0; r <= c; ++r) out(p++) = r == c ? value(r, c) : 0.5 * (value(r, c) + value(c, r));
  return out;
}

Eigen::MatrixXd VariableDecl::unvectorize(const Eigen::VectorXd& coords) const {
  if (!symmetric()) return Eigen::Map<const Eigen::MatrixXd>(coords.data(), rows, cols);
  Eigen::MatrixXd out(rows, rows);
  Eigen::Index p = 0;
  for (Eigen::Index c = 0; c < rows; ++c)
    for (Eigen::Index r = 0; r <= c; ++r) {
      out(r, c) = coords(p);
      out(c, r) = coords(p);
      ++p;
    }
  return out;
}

AffineLmi::AffineLmi(std::string name, std::vector<Eigen::Index> block_sizes, double strictness)
    : name_(std::move(name)), block_sizes_(std::move(block_sizes)), strictness_(strictness) {
  if (strictness_ < 0) throw std::invalid_argument("strictness margin must be nonnegative");
  offsets_.resize(block_sizes_.size());
  Eigen::Index total = 0;
  for (std::size_t b = 0; b < block_sizes_.size(); ++b) {
    if (block_sizes_[b] < 0) throw std::invalid_argument("negative block size");
    offsets_[b] = total;
    total += block_sizes_[b];
  }
  constant_ = Eigen::MatrixXd::Zero(total, total);
}

const VariableDecl* AffineLmi::find_variable(const std::string& id) const {
  for (const auto& v : variables_)
    if (v.id == id) return &v;
  return nullptr;
}

void AffineLmi::declare(const VariableDecl& decl) {
  if (decl.symmetric() && decl.rows != decl.cols)
    throw std::invalid_argument("symmetric variable '" + decl.id + "' must be square");
  if (const auto* existing = find_variable(decl.id)) {
    if (existing->rows != decl.rows || existing->cols != decl.cols || existing->kind != decl.kind)
      throw std::invalid_argument("variable '" + decl.id + "' redeclared with a different shape or kind");
    return;
  }
  variables_.push_back(decl);
}

void AffineLmi::add_constant(Eigen::Index r, Eigen::Index c, const Eigen::MatrixXd& m) {
  const auto nb = static_cast<Eigen::Index>(block_sizes_.size());
  if (r < 0 || c < 0 || r >= nb || c >= nb) throw std::out_of_range("block index out of range");
  if (m.rows() != block_sizes_[r] || m.cols() != block_sizes_[c])
    throw std::invalid_argument(name_ + ": constant block has wrong shape");
  if (r == c) {
    if (!is_symmetric(m, 1e-12)) throw std::invalid_argument(name_ + ": diagonal constant block not symmetric");
    constant_.block(offsets_[r], offsets_[c], m.rows(), m.cols()) += symmetrize(m);
  } else {
    constant_.block(offsets_[r], offsets_[c], m.rows(), m.cols()) += m;
    constant_.block(offsets_[c], offsets_[r], m.cols(), m.rows()) += m.transpose();
  }
}

void AffineLmi::add_term(const std::string& variable, Eigen::MatrixXd left, Eigen::MatrixXd right, Eigen::Index r,
                         Eigen::Index c, bool transposed) {
  const auto* decl = find_variable(variable);
  if (!decl) throw std::invalid_argument(name_ + ": term references undeclared variable '" + variable + "'");
  const auto nb = static_cast<Eigen::Index>(block_sizes_.size());
  if (r < 0 || c < 0 || r >= nb || c >= nb) throw std::out_of_range("block index out of range");
  const Eigen::Index vr = transposed ? decl->cols : decl->rows;
  const Eigen::Index vc = transposed ? decl->rows : decl->cols;
  if (left.rows() != block_sizes_[r] || left.cols() != vr || right.rows() != vc || right.cols() != block_sizes_[c])
    throw std::invalid_argument(name_ + ": term for '" + variable + "' has incompatible coefficient shapes");
  terms_.push_back({variable, std::move(left), std::move(right), r, c, transposed});
}

void AffineLmi::add_left(const std::string& variable, const Eigen::MatrixXd& left, Eigen::Index r, Eigen::Index c) {
  const auto* decl = find_variable(variable);
  if (!decl) throw std::invalid_argument(name_ + ": term references undeclared variable '" + variable + "'");
  add_term(variable, left, Eigen::MatrixXd::Identity(decl->cols, decl->cols), r, c, false);
}

void AffineLmi::place(Eigen::MatrixXd& target, const LmiTerm& term, const Eigen::MatrixXd& value) const {
  const Eigen::MatrixXd contrib =
      term.transposed ? (term.left * value.transpose() * term.right).eval() : (term.left * value * term.right).eval();
  const auto ro = offsets_[term.block_row];
  const auto co = offsets_[term.block_col];
  target.block(ro, co, contrib.rows(), contrib.cols()) += contrib;
  target.block(co, ro, contrib.cols(), contrib.rows()) += contrib.transpose();
}

Eigen::MatrixXd AffineLmi::assemble(const Assignment& values) const {
  Eigen::MatrixXd m = constant_;
  for (const auto& term : terms_) {
    const auto it = values.find(term.variable);
    if (it == values.end()) throw std::invalid_argument(name_ + ": no value for variable '" + term.variable + "'");
    const auto* decl = find_variable(term.variable);
    if (it->second.rows() != decl->rows || it->second.cols() != decl->cols)
      throw std::invalid_argument(name_ + ": value for '" + term.variable + "' has the wrong shape");
    place(m, term, it->second);
  }
  return m;
}

Eigen::MatrixXd AffineLmi::linear_part(const std::string& variable, const Eigen::MatrixXd& value) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size(), size());
  for (const auto& term : terms_)
    if (term.variable == variable) place(m, term, value);
  return m;
}

double AffineLmi::max_eigenvalue(const Assignment& values) const {
  return rdgcc::max_eigenvalue(assemble(values));
}

AffineLmi substitute(const AffineLmi& lmi, const Assignment& fixed) {
  AffineLmi out(lmi.name(), lmi.block_sizes(), lmi.strictness());
  for (const auto& decl : lmi.variables())
    if (!fixed.count(decl.id)) out.declare(decl);
  Eigen::MatrixXd constant = lmi.constant();
  for (const auto& [id, value] : fixed)
    if (lmi.find_variable(id)) constant += lmi.linear_part(id, value);
  const auto nb = static_cast<Eigen::Index>(lmi.block_sizes().size());
  for (Eigen::Index r = 0; r < nb; ++r)
    for (Eigen::Index c = 0; c <= r; ++c) {
      const Eigen::MatrixXd block =
          constant.block(lmi.block_offset(r), lmi.block_offset(c), lmi.block_sizes()[r], lmi.block_sizes()[c]);
      if (r == c)
        out.add_constant(r, c, symmetrize(block));
      else
        out.add_constant(r, c, block);
    }
  for (const auto& term : lmi.terms())
    if (!fixed.count(term.variable))
      out.add_term(term.variable, term.left, term.right, term.block_row, term.block_col, term.transposed);
  return out;
}

}  // namespace rdgcc
