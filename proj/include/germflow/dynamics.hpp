#pragma once

#include <array>
#include <vector>

#include "germflow/fock.hpp"
#include "germflow/geometry.hpp"
#include "germflow/hamiltonian.hpp"

namespace germflow {

// Joint data carried along one classical trajectory:
//   phi:        i dphi/dt = dH/d(conj phi)
//   Pi, Omega:  fundamental variational pair, Pi(0) = E, Omega(0) = 0,
//               i dPi/dt = -hess_pc Pi - hess_pp Omega,
//               i dOmega/dt = hess_cc Pi + hess_cp Omega
//   s_act:      int (phi . d conj phi/dt - i H) dt, the time leg of the
//               exponent (g + int phi d conj phi - i H dt)
//   s_tr:       int sum_mn [hess_pp (F G^-1) + hess_cc conj(F G^-1)] dt on
//               the transported frame; the amplitude factor is e^{-i s_tr/4}
// F0, G0 hold the frame being transported (vacuum frame by default).
struct FlowState {
  double t = 0.0;
  VecC phi;
  MatC Pi, Omega;
  MatC F0, G0;
  cplx s_act = 0.0;
  cplx s_tr = 0.0;
};

FlowState make_flow_state(const VecC& phi0);
FlowState make_flow_state(const VecC& phi0, const MatC& F0, const MatC& G0);

// transported frame, fundamental-pair columns acting on the initial frame
MatC frame_F(const FlowState& st);  // Omega G0 + conj(Pi) F0
MatC frame_G(const FlowState& st);  // Pi G0 + conj(Omega) F0

// defects of the four pairings preserved by a proper canonical pair, in the
// order Pi+Pi - Omega+Omega - E, Omega^T Pi - Pi^T Omega,
// Pi Pi+ - conj(Omega) Omega^T - E, Omega Pi+ - conj(Pi) Omega^T
std::array<double, 4> symplectic_defects(const FlowState& st);
// max of the four
double symplectic_defect(const FlowState& st);

// amplitude transport factor exp(-i s_tr / 4)
cplx transport_factor(const FlowState& st);

// Fixed-step RK4 from st.t to t_target.  The canonical defect is monitored
// after every step and never repaired; exceeding drift_tol or producing
// non-finite values throws with the failure time in the message.
void advance(const HamiltonianCoeffs& h, FlowState& st, double t_target,
             int steps, double drift_tol = 1e-6);

// trajectory sampled at stores+1 evenly spaced times from st.t to t_target
std::vector<FlowState> sample_flow(const HamiltonianCoeffs& h, FlowState st,
                                   double t_target, int steps, int stores,
                                   double drift_tol = 1e-6);

// eps-free quadratic fluctuation generator at phi applied to s:
//   (1/2) hess_cc psi+ psi+ + hess_cp psi+ psi- + (1/2) hess_pp psi- psi-
FockState apply_quadratic_generator(const HamiltonianCoeffs& h, const VecC& phi,
                                    const FockState& s);

// One joint RK4 step of (phi, Pi, Omega) and a state v obeying
// i dv/dt = H2(phi(t)) v, the generator evaluated at the same stage points.
// Returns the advanced classical state; v is updated in place.
FlowState heisenberg_step(const HamiltonianCoeffs& h, const FlowState& st,
                          FockState& v, double dt);

}  // namespace germflow
