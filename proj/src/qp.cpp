#include "rccs/qp.hpp"

namespace rccs {

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal:
      return "optimal";
    case QpStatus::MaxIterations:
      return "max-iter";
    case QpStatus::Infeasible:
      return "infeasible";
  }
  return "unknown";
}

template class DualActiveSetSolver<double>;
template QpSolution<double> solve_qp<double>(const QpProblem<double>&, const QpSettings&);
template KktResiduals<double> kkt_residuals<double>(const QpProblem<double>&, const QpSolution<double>&);

}  // namespace rccs
