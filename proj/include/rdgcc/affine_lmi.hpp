#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace rdgcc {

enum class VariableKind {
  SymmetricPositiveDefinite,
  Symmetric,
  General,
};

struct VariableDecl {
  std::string id;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  VariableKind kind = VariableKind::General;

  bool symmetric() const { return kind != VariableKind::General; }
  /// Number of free scalars.
  Eigen::Index dof() const { return symmetric() ? rows * (rows + 1) / 2 : rows * cols; }
  /// Basis matrix for scalar p; symmetric kinds use E_ab + E_ba (a < b) and E_aa.
  Eigen::MatrixXd basis(Eigen::Index p) const;
  /// Value -> coordinates in the basis above.
  Eigen::VectorXd vectorize(const Eigen::MatrixXd& value) const;
  Eigen::MatrixXd unvectorize(const Eigen::VectorXd& coords) const;
};

/// left * Var * right (Var^T when transposed) placed at (block_row, block_col).
struct LmiTerm {
  std::string variable;
  Eigen::MatrixXd left;
  Eigen::MatrixXd right;
  Eigen::Index block_row = 0;
  Eigen::Index block_col = 0;
  bool transposed = false;
};

using Assignment = std::map<std::string, Eigen::MatrixXd>;

/// Symmetric block matrix affine in named matrix variables, constrained as M <= -strictness * I.
///
/// A term placed off the diagonal contributes C at (r, c) and C^T at (c, r). A term placed on the
/// diagonal contributes C + C^T, so `-Y` for a symmetric Y is written with coefficient -1/2.
class AffineLmi {
 public:
  AffineLmi() = default;
  AffineLmi(std::string name, std::vector<Eigen::Index> block_sizes, double strictness = 0.0);

  const std::string& name() const { return name_; }
  const std::vector<Eigen::Index>& block_sizes() const { return block_sizes_; }
  Eigen::Index size() const { return constant_.rows(); }
  Eigen::Index block_offset(Eigen::Index block) const { return offsets_.at(block); }
  double strictness() const { return strictness_; }
  void set_strictness(double eps) { strictness_ = eps; }

  const Eigen::MatrixXd& constant() const { return constant_; }
  const std::vector<LmiTerm>& terms() const { return terms_; }
  const std::vector<VariableDecl>& variables() const { return variables_; }
  const VariableDecl* find_variable(const std::string& id) const;

  /// Registers a variable; redeclaring with a different shape or kind throws.
  void declare(const VariableDecl& decl);
  /// Adds M at (r, c) and M^T at (c, r); diagonal blocks must be symmetric.
  void add_constant(Eigen::Index r, Eigen::Index c, const Eigen::MatrixXd& m);
  void add_term(const std::string& variable, Eigen::MatrixXd left, Eigen::MatrixXd right, Eigen::Index r,
                Eigen::Index c, bool transposed = false);
  /// left * Var placed at (r, c), right factor = identity.
  void add_left(const std::string& variable, const Eigen::MatrixXd& left, Eigen::Index r, Eigen::Index c);

  /// Full symmetric matrix at an assignment. Variables not referenced by any term may be absent.
  Eigen::MatrixXd assemble(const Assignment& values) const;
  /// Contribution of one variable set to `value` with every other variable zero, constant excluded.
  Eigen::MatrixXd linear_part(const std::string& variable, const Eigen::MatrixXd& value) const;
  /// lambda_max(M) at the assignment.
  double max_eigenvalue(const Assignment& values) const;
  /// lambda_max(M) + strictness; <= 0 means satisfied.
  double violation(const Assignment& values) const { return max_eigenvalue(values) + strictness_; }

 private:
  void place(Eigen::MatrixXd& target, const LmiTerm& term, const Eigen::MatrixXd& value) const;

  std::string name_;
  std::vector<Eigen::Index> block_sizes_;
  std::vector<Eigen::Index> offsets_;
  Eigen::MatrixXd constant_;
  std::vector<LmiTerm> terms_;
  std::vector<VariableDecl> variables_;
  double strictness_ = 0.0;
};

/// Folds the variables in `fixed` into the constant part; remaining terms are kept as they are.
AffineLmi substitute(const AffineLmi& lmi, const Assignment& fixed);

}  // namespace rdgcc
