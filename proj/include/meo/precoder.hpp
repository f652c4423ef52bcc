// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "meo/common.hpp"

namespace meo {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

enum class PrecoderMethod { ZF, MMSE };

std::string to_string(PrecoderMethod m);
PrecoderMethod precoder_method_from_string(const std::string& text);

/// What terminal k reports over the return link: phases self-referenced to
/// its own beam, plus magnitudes.
struct CsiReport {
    int ut{};
    double t{};                       // measurement instant, s
    std::vector<double> diff_phases;  // psi_hat(k, j) = psi(k, j) - psi(k, k), wrapped
    std::vector<double> magnitudes;   // |h_hat(k, j)|
    double quality{};                 // per-entry estimation variance

    cplx entry(std::size_t j) const { return std::polar(magnitudes[j], diff_phases[j]); }
};

/// Data-aided estimate from L orthogonal, non-precoded pilots per beam:
/// h_hat = h + eta, eta ~ CN(0, noise_var / L).
CsiReport estimate_csi(std::span<const cplx> true_row, int ut, double t, int pilot_len, double noise_var,
                       std::mt19937_64& rng);
CsiReport estimate_csi(std::span<const cplx> true_row, int ut, double t, int pilot_len, double noise_var,
                       std::uint64_t seed);

struct PrecoderState {
    CMatrix W;                        // N x K
    PrecoderMethod method{PrecoderMethod::MMSE};
    double power_budget{};
    double computed_at{};
};

class RankDeficientError : public Error {
public:
    RankDeficientError(const std::string& what, double condition_number)
        : Error(what), condition_number_(condition_number)
    {
    }
    double condition_number() const { return condition_number_; }

private:
    double condition_number_;
};

/// ZF:   W0 = H^H (H H^H)^-1
/// MMSE: W0 = H^H (H H^H + (K noise_var / P) I)^-1
/// then W = W0 sqrt(P / trace(W0 W0^H)).
PrecoderState compute_precoder(const CMatrix& H_hat, PrecoderMethod method, double noise_var, double power_budget,
                               double t = 0.0);

/// Non-precoded reference: beam j carries UT j, same total power.
PrecoderState identity_precoder(int n_beams, int n_users, double power_budget, double t = 0.0);

struct GatewayChannelView {
    CMatrix H_hat;            // K x N
    std::vector<bool> stale;  // per row
};

/// Row k = |h_hat(k, .)| * exp(j psi_hat(k, .)). Each row's common phase is not
/// observable and is zero. Reports older than `staleness_bound` (or missing)
/// set the row's stale flag; missing rows are zero.
GatewayChannelView assemble_gw_channel_view(const std::vector<std::optional<CsiReport>>& latest, int n_beams,
                                            double now, double staleness_bound);

/// r = H_eff W s + z with z ~ CN(0, noise_var) per entry; s is K x L.
CMatrix forward_link(const CMatrix& H_eff, const CMatrix& W, const CMatrix& s, double noise_var,
                     std::mt19937_64& rng);

/// SINR_k = |g_kk|^2 / (sum_{j != k} |g_kj|^2 + noise_var), G = H_eff W (linear).
/// +inf when the denominator vanishes; interference below 1e-20 of the wanted
/// power counts as zero.
std::vector<double> closed_form_sinr(const CMatrix& H_eff, const CMatrix& W, double noise_var);

/// Unit-power QPSK symbols, K x L.
CMatrix qpsk_symbols(int users, int length, std::mt19937_64& rng);

/// CSV rows: t, ut, j, psi_hat_rad, mag
void write_csi_csv_header(std::ostream& out);
void write_csi_csv(std::ostream& out, const CsiReport& report);

} // namespace meo
