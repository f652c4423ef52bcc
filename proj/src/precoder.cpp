// SPDX-License-Identifier: Apache-2.0
#include "meo/precoder.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

namespace meo {

std::string to_string(PrecoderMethod m)
{
    return m == PrecoderMethod::ZF ? "zf" : "mmse";
}

PrecoderMethod precoder_method_from_string(const std::string& text)
{
    std::string s;
    for (char c : text) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (s == "zf") return PrecoderMethod::ZF;
    if (s == "mmse") return PrecoderMethod::MMSE;
    throw Error("unknown precoder method '" + text + "' (expected zf or mmse)");
}

CsiReport estimate_csi(std::span<const cplx> true_row, int ut, double t, int pilot_len, double noise_var,
                       std::mt19937_64& rng)
{
    if (pilot_len < 1) throw Error("pilot length must be at least 1");
    if (ut < 0 || static_cast<std::size_t>(ut) >= true_row.size()) throw Error("terminal index outside channel row");
    const double var = noise_var / pilot_len;
    std::vector<cplx> est(true_row.begin(), true_row.end());
    if (var > 0.0) {
        std::normal_distribution<double> normal(0.0, std::sqrt(0.5 * var));
        for (auto& h : est) {
            const double re = normal(rng);
            const double im = normal(rng);
            h += cplx(re, im);
        }
    }
    CsiReport r;
    r.ut = ut;
    r.t = t;
    r.quality = var;
    const double self = std::arg(est[static_cast<std::size_t>(ut)]);
    for (std::size_t j = 0; j < est.size(); ++j) {
        r.magnitudes.push_back(std::abs(est[j]));
        r.diff_phases.push_back(static_cast<int>(j) == ut ? 0.0 : wrap_pi(std::arg(est[j]) - self));
    }
    return r;
}

CsiReport estimate_csi(std::span<const cplx> true_row, int ut, double t, int pilot_len, double noise_var,
                       std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return estimate_csi(true_row, ut, t, pilot_len, noise_var, rng);
}

PrecoderState compute_precoder(const CMatrix& H_hat, PrecoderMethod method, double noise_var, double power_budget,
                               double t)
{
    const auto K = H_hat.rows();
    const auto N = H_hat.cols();
    if (K == 0 || K > N) throw Error("precoder needs 1 <= K <= N");
    if (!(power_budget > 0.0)) throw Error("power budget must be positive");
    const CMatrix gram = H_hat * H_hat.adjoint();
    CMatrix reg = gram;
    if (method == PrecoderMethod::ZF) {
        Eigen::JacobiSVD<CMatrix> svd(H_hat);
        const auto& sv = svd.singularValues();
        const double smax = sv(0);
        const double smin = sv(sv.size() - 1);
        const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
        if (!(smax > 0.0) || cond > 1e12) {
            throw RankDeficientError(fmt::format("channel estimate is rank deficient (condition number {:.3g})", cond),
                                     cond);
        }
    } else {
        reg += CMatrix::Identity(K, K) * (static_cast<double>(K) * noise_var / power_budget);
    }
    const CMatrix W0 = H_hat.adjoint() * reg.partialPivLu().solve(CMatrix::Identity(K, K));
    const double tr = (W0 * W0.adjoint()).trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr)) throw Error("precoder normalization failed");
    return {W0 * std::sqrt(power_budget / tr), method, power_budget, t};
}

PrecoderState identity_precoder(int n_beams, int n_users, double power_budget, double t)
{
    if (n_users > n_beams || n_users < 1) throw Error("precoder needs 1 <= K <= N");
    CMatrix W = CMatrix::Zero(n_beams, n_users);
    const double a = std::sqrt(power_budget / n_users);
    for (int k = 0; k < n_users; ++k) W(k, k) = a;
    return {W, PrecoderMethod::MMSE, power_budget, t};
}

GatewayChannelView assemble_gw_channel_view(const std::vector<std::optional<CsiReport>>& latest, int n_beams,
                                            double now, double staleness_bound)
{
    const auto K = static_cast<Eigen::Index>(latest.size());
    GatewayChannelView view{CMatrix::Zero(K, n_beams), std::vector<bool>(latest.size(), false)};
    for (Eigen::Index k = 0; k < K; ++k) {
        const auto& rep = latest[static_cast<std::size_t>(k)];
        if (!rep) {
            view.stale[static_cast<std::size_t>(k)] = true;
            continue;
        }
        if (now - rep->t > staleness_bound) view.stale[static_cast<std::size_t>(k)] = true;
        for (int j = 0; j < n_beams; ++j) view.H_hat(k, j) = rep->entry(static_cast<std::size_t>(j));
    }
    return view;
}

CMatrix forward_link(const CMatrix& H_eff, const CMatrix& W, const CMatrix& s, double noise_var,
                     std::mt19937_64& rng)
{
    if (H_eff.cols() != W.rows() || W.cols() != s.rows()) throw Error("forward link dimension mismatch");
    CMatrix r = H_eff * W * s;
    if (noise_var > 0.0) {
        std::normal_distribution<double> normal(0.0, std::sqrt(0.5 * noise_var));
        for (Eigen::Index c = 0; c < r.cols(); ++c) {
            for (Eigen::Index k = 0; k < r.rows(); ++k) {
                const double re = normal(rng);
                const double im = normal(rng);
                r(k, c) += cplx(re, im);
            }
        }
    }
    return r;
}

std::vector<double> closed_form_sinr(const CMatrix& H_eff, const CMatrix& W, double noise_var)
{
    const CMatrix G = H_eff * W;
    std::vector<double> out(static_cast<std::size_t>(G.rows()));
    for (Eigen::Index k = 0; k < G.rows(); ++k) {
        double interference = 0.0;
        for (Eigen::Index j = 0; j < G.cols(); ++j) {
            if (j != k) interference += std::norm(G(k, j));
        }
        const double num = k < G.cols() ? std::norm(G(k, k)) : 0.0;
        // Treat residue 200 dB below the wanted term as exact cancellation.
        if (interference < 1e-20 * num) interference = 0.0;
        const double den = interference + noise_var;
        out[static_cast<std::size_t>(k)] = den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
    }
    return out;
}

CMatrix qpsk_symbols(int users, int length, std::mt19937_64& rng)
{
    CMatrix s(users, length);
    const double a = 1.0 / std::sqrt(2.0);
    for (int c = 0; c < length; ++c) {
        for (int k = 0; k < users; ++k) {
            const auto bits = rng();
            s(k, c) = cplx((bits & 1U) ? a : -a, (bits & 2U) ? a : -a);
        }
    }
    return s;
}

void write_csi_csv_header(std::ostream& out)
{
    out << "t,ut,j,psi_hat_rad,mag\n";
}

void write_csi_csv(std::ostream& out, const CsiReport& report)
{
    for (std::size_t j = 0; j < report.diff_phases.size(); ++j) {
        out << fmt::format("{:.9g},{},{},{:.9g},{:.9g}\n", report.t, report.ut, j, report.diff_phases[j],
                           report.magnitudes[j]);
    }
}

} // namespace meo
