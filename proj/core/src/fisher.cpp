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

#include "nfpb/fisher.hpp"

#include "nfpb/beamformer.hpp"
#include "nfpb/signature.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nfpb
{
    namespace
    {
        constexpr double kInf = std::numeric_limits<double>::infinity();
        constexpr double kSingularCondition = 1e26; // FIM condition, i.e. 1e13 on the Jacobian
        constexpr double kRidge = 1e-12;

        Eigen::VectorXcd probe_or_ones(const FisherInputs &in)
        {
            if (in.probe.size() == 0)
                return Eigen::VectorXcd::Ones(in.clock.snapshots);
            return in.probe;
        }

        TargetState perturbed(const TargetState &s, int i, double h)
        {
            Eigen::Vector4d v = s.to_vector();
            v[i] += h;
            return TargetState::from_vector(v);
        }

        void fill_crb_fields(CrbReport &rep, const Eigen::Matrix4d &crb)
        {
            rep.crb = 0.5 * (crb + crb.transpose());
            for (int i = 0; i < 4; ++i)
            {
                const double v = rep.crb(i, i);
                rep.rcrb[i] = std::isfinite(v) ? std::sqrt(std::max(v, 0.0)) : kInf;
            }
        }

        // Ridge-regularised inverse of an equilibrated matrix; parameters whose
        // variance comes mostly from the ridge are reported as unbounded.
        Matrix6d ridge_inverse(const Matrix6d &eq, bool &dominated_any, std::array<bool, 6> &dominated)
        {
            const double ridge = kRidge * eq.trace();
            const Matrix6d reg = eq + ridge * Matrix6d::Identity();
            Matrix6d inv = reg.ldlt().solve(Matrix6d::Identity());
            dominated_any = false;
            for (int i = 0; i < 6; ++i)
            {
                dominated[i] = inv(i, i) * ridge > 0.5;
                dominated_any = dominated_any || dominated[i];
            }
            return inv;
        }
    } // namespace

    Eigen::MatrixXcd mean_jacobian(const FisherInputs &in, bool *one_sided)
    {
        in.array.validate();
        in.clock.validate();
        in.eta.validate();
        const Eigen::VectorXcd probe = probe_or_ones(in);
        const double rho = in.eta.r; // fixed reference keeps the differences well conditioned
        const std::complex<double> amp = in.beta * std::sqrt(in.tx_power);
        const Eigen::VectorXcd u0 = signature(in.array, in.clock, in.eta, in.weights, probe, rho);

        Eigen::MatrixXcd J(u0.size(), 6);
        bool fallback = false;
        for (int i = 0; i < 4; ++i)
        {
            const double h = in.steps[i];
            const TargetState plus = perturbed(in.eta, i, h);
            const TargetState minus = perturbed(in.eta, i, -h);
            if (plus.is_valid() && minus.is_valid())
            {
                J.col(i) = amp *
                           (signature(in.array, in.clock, plus, in.weights, probe, rho) -
                            signature(in.array, in.clock, minus, in.weights, probe, rho)) /
                           (2.0 * h);
            }
            else if (plus.is_valid())
            {
                fallback = true;
                J.col(i) = amp * (signature(in.array, in.clock, plus, in.weights, probe, rho) - u0) / h;
            }
            else if (minus.is_valid())
            {
                fallback = true;
                J.col(i) = amp * (u0 - signature(in.array, in.clock, minus, in.weights, probe, rho)) / h;
            }
            else
            {
                throw std::domain_error("mean_jacobian: no valid finite-difference stencil");
            }
        }
        // The reference phase exp(j 2 k rho) is common to every column and
        // therefore leaves Re{J^H J} unchanged.
        J.col(4) = std::sqrt(in.tx_power) * u0;
        J.col(5) = std::complex<double>(0.0, 1.0) * std::sqrt(in.tx_power) * u0;
        if (one_sided)
            *one_sided = fallback;
        return J;
    }

    Matrix6d fisher_information(const FisherInputs &in)
    {
        if (!(in.noise_power > 0.0))
            throw std::invalid_argument("fisher_information: noise power must be positive");
        const Eigen::MatrixXcd J = mean_jacobian(in);
        Matrix6d F = (J.adjoint() * J).real() * (2.0 / in.noise_power);
        return 0.5 * (F + F.transpose());
    }

    CrbReport crb_from_fim(const Matrix6d &fim)
    {
        CrbReport rep;
        rep.fim = 0.5 * (fim + fim.transpose());
        Eigen::Matrix<double, 6, 1> scale;
        bool zero_diag = false;
        for (int i = 0; i < 6; ++i)
        {
            const double d = rep.fim(i, i);
            zero_diag = zero_diag || !(d > 0.0);
            scale[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
        }
        if (zero_diag)
        {
            // Parameters without information are unbounded; bound the rest.
            rep.singular = true;
            rep.condition_number = kInf;
            std::vector<int> live;
            for (int i = 0; i < 6; ++i)
                if (scale[i] > 0.0)
                    live.push_back(i);
            Eigen::MatrixXd sub(live.size(), live.size());
            for (std::size_t a = 0; a < live.size(); ++a)
                for (std::size_t b = 0; b < live.size(); ++b)
                    sub(a, b) = rep.fim(live[a], live[b]) * scale[live[a]] * scale[live[b]];
            Eigen::MatrixXd inv = sub.size() ? Eigen::MatrixXd(sub.ldlt().solve(
                                                   Eigen::MatrixXd::Identity(sub.rows(), sub.cols())))
                                             : Eigen::MatrixXd();
            Eigen::Matrix4d crb = Eigen::Matrix4d::Constant(0.0);
            for (int i = 0; i < 4; ++i)
                crb(i, i) = kInf;
            for (std::size_t a = 0; a < live.size(); ++a)
                for (std::size_t b = 0; b < live.size(); ++b)
                    if (live[a] < 4 && live[b] < 4)
                        crb(live[a], live[b]) = inv(a, b) * scale[live[a]] * scale[live[b]];
            fill_crb_fields(rep, crb);
            return rep;
        }

        const Matrix6d eq = scale.asDiagonal() * rep.fim * scale.asDiagonal();
        const Eigen::SelfAdjointEigenSolver<Matrix6d> es(eq);
        const double lmax = es.eigenvalues().maxCoeff();
        const double lmin = es.eigenvalues().minCoeff();
        rep.condition_number = lmin > 0.0 ? lmax / lmin : kInf;

        Matrix6d inv_eq;
        std::array<bool, 6> dominated{};
        if (rep.condition_number < 1e15)
        {
            inv_eq = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
        }
        else
        {
            rep.singular = true;
            bool any = false;
            inv_eq = ridge_inverse(eq, any, dominated);
        }
        const Matrix6d inv = scale.asDiagonal() * inv_eq * scale.asDiagonal();
        Eigen::Matrix4d crb = inv.topLeftCorner<4, 4>();
        for (int i = 0; i < 4; ++i)
            if (dominated[i])
                crb(i, i) = kInf;
        fill_crb_fields(rep, crb);
        return rep;
    }

    CrbReport crb_report(const FisherInputs &in)
    {
        if (!(in.noise_power > 0.0))
            throw std::invalid_argument("crb_report: noise power must be positive");
        CrbReport rep;
        const Eigen::MatrixXcd J = mean_jacobian(in, &rep.one_sided);
        const double amp = std::sqrt(2.0 / in.noise_power);
        rep.fim = (J.adjoint() * J).real() * (amp * amp);
        rep.fim = 0.5 * (rep.fim + rep.fim.transpose());

        // Real stacked Jacobian: F = Jr^T Jr.
        const Eigen::Index rows = J.rows();
        Eigen::MatrixXd Jr(2 * rows, 6);
        Jr.topRows(rows) = J.real() * amp;
        Jr.bottomRows(rows) = J.imag() * amp;
        Eigen::Matrix<double, 6, 1> norms;
        for (int i = 0; i < 6; ++i)
            norms[i] = Jr.col(i).norm();
        if ((norms.array() <= 0.0).any() || !norms.allFinite())
        {
            CrbReport fallback = crb_from_fim(rep.fim);
            fallback.one_sided = rep.one_sided;
            return fallback;
        }
        for (int i = 0; i < 6; ++i)
            Jr.col(i) /= norms[i];

        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(Jr);
        const Matrix6d R = qr.matrixQR().topRows<6>().triangularView<Eigen::Upper>();
        const Eigen::JacobiSVD<Matrix6d> svd(R);
        const double smax = svd.singularValues()[0];
        const double smin = svd.singularValues()[5];
        rep.condition_number = smin > 0.0 ? (smax / smin) * (smax / smin) : kInf;

        Matrix6d inv_eq;
        std::array<bool, 6> dominated{};
        if (rep.condition_number < kSingularCondition)
        {
            const Matrix6d Rinv = R.triangularView<Eigen::Upper>().solve(Matrix6d::Identity());
            inv_eq = Rinv * Rinv.transpose();
        }
        else
        {
            rep.singular = true;
            bool any = false;
            inv_eq = ridge_inverse(R.transpose() * R, any, dominated);
        }
        const Eigen::Matrix<double, 6, 1> s = norms.cwiseInverse();
        const Matrix6d inv = s.asDiagonal() * inv_eq * s.asDiagonal();
        Eigen::Matrix4d crb = inv.topLeftCorner<4, 4>();
        for (int i = 0; i < 4; ++i)
            if (dominated[i])
                crb(i, i) = kInf;
        fill_crb_fields(rep, crb);
        return rep;
    }

    std::vector<SweepRow> rcrb_sweep(const ArrayConfig &cfg, const CpiClock &clock, const TargetState &base,
                                     std::complex<double> beta, double noise_power, double tx_power,
                                     std::span<const double> ranges)
    {
        const std::complex<double> unit_beta = std::abs(beta) > 0.0 ? beta / std::abs(beta) : 1.0;
        std::vector<SweepRow> rows;
        rows.reserve(ranges.size());
        for (double r : ranges)
        {
            FisherInputs in;
            in.array = cfg;
            in.clock = clock;
            in.eta = base;
            in.eta.r = r;
            in.beta = unit_beta;
            in.noise_power = noise_power;
            in.tx_power = tx_power;
            in.weights = focus_weights(cfg, in.eta.location());
            const CrbReport rep = crb_report(in);
            rows.push_back({r, rep.rcrb, rep.condition_number, rep.singular});
        }
        return rows;
    }

    std::vector<double> log_spaced(double lo, double hi, int n)
    {
        if (n < 1 || !(lo > 0.0) || !(hi >= lo))
            throw std::invalid_argument("log_spaced: need n >= 1 and 0 < lo <= hi");
        std::vector<double> out(n);
        if (n == 1)
        {
            out[0] = lo;
            return out;
        }
        const double a = std::log(lo), b = std::log(hi);
        for (int i = 0; i < n; ++i)
            out[i] = std::exp(a + (b - a) * i / (n - 1));
        out.front() = lo;
        out.back() = hi;
        return out;
    }

} // namespace nfpb
