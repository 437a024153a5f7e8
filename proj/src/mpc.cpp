#include "rccs/mpc.hpp"

namespace rccs {

template class MpcController<double>;
template QpProblem<double> build_qp<double>(const MpcSpec<double>&, const DiscreteModel<double>&,
                                            const Vector<double>&, const Vector<double>&, const Matrix<double>*);

}  // namespace rccs
