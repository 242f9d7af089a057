// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef NFPB_FISHER_HPP
#define NFPB_FISHER_HPP

#include "nfpb/array_geometry.hpp"
#include "nfpb/kinematics.hpp"

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <vector>

namespace nfpb
{
    using Matrix6d = Eigen::Matrix<double, 6, 6>;

    /// Everything the echo mean depends on. Parameters are ordered
    /// (theta, r, v_r, v_theta, Re beta, Im beta).
    struct FisherInputs
    {
        ArrayConfig array;
        CpiClock clock;
        TargetState eta;
        std::complex<double> beta{1.0, 0.0};
        Eigen::VectorXcd weights;
        Eigen::VectorXcd probe; // empty means all-ones
        double noise_power = 1.0;
        double tx_power = 1.0;
        Eigen::Vector4d steps{1e-6, 1e-5, 1e-4, 1e-4}; // central-difference steps
    };

    struct CrbReport
    {
        Matrix6d fim = Matrix6d::Zero();
        Eigen::Matrix4d crb = Eigen::Matrix4d::Zero();
        Eigen::Vector4d rcrb = Eigen::Vector4d::Zero(); // rad, m, m/s, m/s
        double condition_number = 0.0;                  // of the diagonally equilibrated FIM
        bool singular = false;
        bool one_sided = false; // a finite difference fell back to one side
    };

    /// d mu / d parameter, one column per parameter, rows stacked like the
    /// signature. Velocity and location columns use central differences.
    Eigen::MatrixXcd mean_jacobian(const FisherInputs &in, bool *one_sided = nullptr);

    /// FIM_ij = (2 / sigma^2) Re{ d mu_i^H d mu_j }.
    Matrix6d fisher_information(const FisherInputs &in);

    /// CRB of the four mobility parameters with beta marginalised.
    ///
    /// The bound is taken from a QR factorisation of the column-scaled
    /// Jacobian rather than by inverting the assembled FIM: in the far field the
    /// FIM condition number approaches 1e16 and forming J^T J would square it.
    CrbReport crb_report(const FisherInputs &in);

    /// Bound from an already assembled FIM (equilibrated inversion; a
    /// 1e-12 trace ridge is added when the matrix is numerically singular).
    CrbReport crb_from_fim(const Matrix6d &fim);

    struct SweepRow
    {
        double r = 0.0;
        Eigen::Vector4d rcrb = Eigen::Vector4d::Zero();
        double condition_number = 0.0;
        bool singular = false;
    };

    /// RCRB against distance with |beta| = 1 and the beam refocused at every
    /// evaluation point. base.r is ignored.
    std::vector<SweepRow> rcrb_sweep(const ArrayConfig &cfg, const CpiClock &clock, const TargetState &base,
                                     std::complex<double> beta, double noise_power, double tx_power,
                                     std::span<const double> ranges);

    /// n points logarithmically spaced over [lo, hi].
    std::vector<double> log_spaced(double lo, double hi, int n);

} // namespace nfpb

#endif
