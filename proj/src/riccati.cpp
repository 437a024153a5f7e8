#include "rccs/riccati.hpp"

namespace rccs {

template Matrix<double> solve_dare<double>(const Matrix<double>&, const Matrix<double>&, const Matrix<double>&,
                                           const Matrix<double>&, int);
template Matrix<double> lqr_gain<double>(const DiscreteModel<double>&, const Matrix<double>&,
                                         const Matrix<double>&);

}  // namespace rccs
