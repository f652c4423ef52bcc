// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "meo/oracles.hpp"
#include "meo/precoder.hpp"
#include "support.hpp"

using namespace meo;
using Catch::Approx;

namespace {

CMatrix row_phase_free(const CMatrix& H)
{
    CMatrix out = H;
    for (int k = 0; k < H.rows(); ++k) out.row(k) *= std::polar(1.0, -std::arg(H(k, k)));
    return out;
}

std::vector<cplx> row_of(const CMatrix& H, int k)
{
    std::vector<cplx> r;
    for (int j = 0; j < H.cols(); ++j) r.push_back(H(k, j));
    return r;
}

} // namespace

TEST_CASE("noiseless CSI reports the true differential phases")
{
    std::mt19937_64 rng(1);
    const CMatrix H = test::random_matrix(4, 4, rng);
    for (int k = 0; k < 4; ++k) {
        const CsiReport r = estimate_csi(row_of(H, k), k, 0.25, 128, 0.0, rng);
        CHECK(r.diff_phases[static_cast<std::size_t>(k)] == 0.0);
        for (int j = 0; j < 4; ++j) {
            const double truth = wrap_pi(std::arg(H(k, j)) - std::arg(H(k, k)));
            CHECK(r.diff_phases[static_cast<std::size_t>(j)] == Approx(truth).margin(1e-15));
            CHECK(r.magnitudes[static_cast<std::size_t>(j)] == std::abs(H(k, j)));
            CHECK(r.diff_phases[static_cast<std::size_t>(j)] > -kPi);
            CHECK(r.diff_phases[static_cast<std::size_t>(j)] <= kPi);
        }
    }
}

TEST_CASE("CSI phase error matches the small-error formula")
{
    const std::vector<cplx> row{std::polar(1.0, 0.4), std::polar(0.5, -2.0), std::polar(0.8, 3.0), std::polar(0.3, 1.0)};
    const int L = 64;
    const double var = 0.1;
    std::mt19937_64 rng(9);
    std::vector<double> err;
    std::vector<double> self;
    for (int trial = 0; trial < 10000; ++trial) {
        const CsiReport r = estimate_csi(row, 0, 0.0, L, var, rng);
        REQUIRE(r.diff_phases[0] == 0.0);
        err.push_back(wrap_pi(r.diff_phases[1] - wrap_pi(std::arg(row[1]) - std::arg(row[0]))));
    }
    double ms = 0.0;
    for (double e : err) ms += e * e;
    const double measured = std::sqrt(ms / static_cast<double>(err.size()));
    // Differential phase: two independent estimates, sigma/(sqrt(2L)|h|) each.
    const double s0 = std::sqrt(var) / (std::sqrt(2.0 * L) * std::abs(row[0]));
    const double s1 = std::sqrt(var) / (std::sqrt(2.0 * L) * std::abs(row[1]));
    CHECK(measured == Approx(std::hypot(s0, s1)).epsilon(0.05));
}

TEST_CASE("zero forcing")
{
    const PrecoderState id = compute_precoder(CMatrix::Identity(4, 4), PrecoderMethod::ZF, 0.1, 4.0);
    CHECK((id.W - CMatrix::Identity(4, 4)).norm() < 1e-12);

    const PrecoderState half = compute_precoder(CMatrix::Identity(4, 4), PrecoderMethod::ZF, 0.1, 2.0);
    CHECK((half.W - std::sqrt(0.5) * CMatrix::Identity(4, 4)).norm() < 1e-12);

    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const CMatrix H = test::random_matrix(4, 4, rng);
        const PrecoderState zf = compute_precoder(H, PrecoderMethod::ZF, 0.1, 4.0, 1.5);
        CHECK(zf.computed_at == 1.5);
        const CMatrix G = H * zf.W;
        const double d = std::abs(G(0, 0));
        for (int k = 0; k < 4; ++k) {
            REQUIRE(std::abs(G(k, k) - cplx(d, 0.0)) < 1e-10 * d);
            for (int j = 0; j < 4; ++j)
                if (j != k) REQUIRE(std::abs(G(k, j)) < 1e-10 * d);
        }
    }
}

TEST_CASE("rank-deficient estimate under zero forcing")
{
    CMatrix H = CMatrix::Identity(4, 4);
    H.row(3) = H.row(2);
    try {
        compute_precoder(H, PrecoderMethod::ZF, 0.1, 4.0);
        FAIL("expected RankDeficientError");
    } catch (const RankDeficientError& e) {
        CHECK(e.condition_number() > 1e12);
        CHECK(std::string(e.what()).find("condition number") != std::string::npos);
    }
    CHECK_NOTHROW(compute_precoder(H, PrecoderMethod::MMSE, 0.1, 4.0));
}

TEST_CASE("MMSE tends to zero forcing")
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const CMatrix H = test::random_matrix(4, 4, rng);
        const CMatrix zf = compute_precoder(H, PrecoderMethod::ZF, 0.0, 4.0).W;
        const CMatrix mmse = compute_precoder(H, PrecoderMethod::MMSE, 1e-12, 4.0).W;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) REQUIRE(std::abs(mmse(r, c) - zf(r, c)) < 1e-6 * std::abs(zf(r, c)));
    }
}

TEST_CASE("power normalization")
{
    std::mt19937_64 rng(4);
    for (PrecoderMethod m : {PrecoderMethod::ZF, PrecoderMethod::MMSE}) {
        for (int trial = 0; trial < 50; ++trial) {
            const CMatrix H = test::random_matrix(4, 4, rng);
            const PrecoderState s = compute_precoder(H, m, 0.1, 4.0);
            REQUIRE(std::abs((s.W * s.W.adjoint()).trace().real() - 4.0) < 4.0 * 1e-9);
        }
    }
    const PrecoderState off = identity_precoder(4, 4, 4.0);
    CHECK((off.W - CMatrix::Identity(4, 4)).norm() < 1e-15);
    CHECK(std::abs((off.W * off.W.adjoint()).trace().real() - 4.0) < 1e-12);
}

TEST_CASE("per-row common phase does not change the SINR")
{
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    for (PrecoderMethod m : {PrecoderMethod::ZF, PrecoderMethod::MMSE}) {
        for (int trial = 0; trial < 30; ++trial) {
            const CMatrix H = test::random_matrix(4, 4, rng);
            CMatrix rotated = H;
            for (int k = 0; k < 4; ++k) rotated.row(k) *= std::polar(1.0, angle(rng));
            const auto a = closed_form_sinr(H, compute_precoder(H, m, 0.1, 4.0).W, 0.1);
            const auto b = closed_form_sinr(H, compute_precoder(rotated, m, 0.1, 4.0).W, 0.1);
            for (int k = 0; k < 4; ++k) REQUIRE(std::abs(a[static_cast<std::size_t>(k)] - b[static_cast<std::size_t>(k)]) < 1e-10 * a[static_cast<std::size_t>(k)]);
        }
    }
}

TEST_CASE("gateway channel view")
{
    std::mt19937_64 rng(7);
    const CMatrix H = test::random_matrix(4, 4, rng);
    std::vector<std::optional<CsiReport>> reports;
    for (int k = 0; k < 4; ++k) reports.push_back(estimate_csi(row_of(H, k), k, 1.0, 128, 0.0, rng));

    const GatewayChannelView view = assemble_gw_channel_view(reports, 4, 1.1, 0.5);
    CHECK((view.H_hat - row_phase_free(H)).norm() < 1e-12);
    for (bool s : view.stale) CHECK_FALSE(s);

    const CMatrix w_hat = compute_precoder(view.H_hat, PrecoderMethod::ZF, 0.0, 4.0).W;
    const CMatrix w_true = compute_precoder(row_phase_free(H), PrecoderMethod::ZF, 0.0, 4.0).W;
    CHECK((view.H_hat * w_hat).cwiseAbs().isApprox((row_phase_free(H) * w_true).cwiseAbs(), 1e-10));
    // The true channel sees the same magnitude structure: row phases only rotate each row.
    CHECK((H * w_hat).cwiseAbs().isApprox((view.H_hat * w_hat).cwiseAbs(), 1e-10));

    reports[2].reset();
    const GatewayChannelView missing = assemble_gw_channel_view(reports, 4, 1.1, 0.5);
    CHECK(missing.stale[2]);
    CHECK_FALSE(missing.stale[1]);
    CHECK(missing.H_hat.row(2).norm() == 0.0);

    const GatewayChannelView old = assemble_gw_channel_view(reports, 4, 2.0, 0.5);
    CHECK(old.stale[0]);
}

TEST_CASE("forward link")
{
    std::mt19937_64 rng(8);
    const CMatrix s = qpsk_symbols(4, 256, rng);
    for (int k = 0; k < 4; ++k) {
        double p = 0.0;
        for (int c = 0; c < s.cols(); ++c) p += std::norm(s(k, c));
        CHECK(p / static_cast<double>(s.cols()) == Approx(1.0).epsilon(1e-12));
    }
    const CMatrix I = CMatrix::Identity(4, 4);
    CHECK((forward_link(I, I, s, 0.0, rng) - s).norm() == 0.0);

    const CMatrix H = test::random_matrix(4, 4, rng);
    const CMatrix W = compute_precoder(H, PrecoderMethod::ZF, 0.0, 4.0).W;
    const CMatrix r = forward_link(H, W, s, 0.0, rng);
    const cplx c = (H * W)(0, 0);
    CHECK((r - c * s).norm() < 1e-10 * s.norm());

    CHECK_THROWS_AS(forward_link(H, W, qpsk_symbols(3, 4, rng), 0.0, rng), Error);
}

TEST_CASE("error-vector SINR agrees with the closed form")
{
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 10; ++trial) {
        const CMatrix H = test::random_matrix(4, 4, rng);
        const CMatrix W = compute_precoder(H + 0.2 * test::random_matrix(4, 4, rng), PrecoderMethod::MMSE, 0.1, 4.0).W;
        const CMatrix s = qpsk_symbols(4, 10000, rng);
        const CMatrix r = forward_link(H, W, s, 0.1, rng);
        const CMatrix G = H * W;
        const auto closed = closed_form_sinr(H, W, 0.1);
        for (int k = 0; k < 4; ++k) {
            double err = 0.0;
            for (int c = 0; c < s.cols(); ++c) err += std::norm(r(k, c) - G(k, k) * s(k, c));
            const double evm = std::norm(G(k, k)) * static_cast<double>(s.cols()) / err;
            REQUIRE(std::abs(to_db(evm) - to_db(closed[static_cast<std::size_t>(k)])) < 0.2);
        }
    }
}

TEST_CASE("closed-form SINR against the brute-force expansion")
{
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const CMatrix H = test::random_matrix(4, 4, rng);
        const CMatrix W = test::random_matrix(4, 4, rng);
        const double var = trial % 2 ? 0.0 : 0.3;
        const auto lib = closed_form_sinr(H, W, var);
        const auto ref = oracle::sinr_bruteforce(test::to_oracle(H), test::to_oracle(W), var);
        for (std::size_t k = 0; k < 4; ++k) REQUIRE(std::abs(lib[k] - ref[k]) <= 1e-12 * ref[k]);
    }

    const CMatrix H = test::random_matrix(4, 4, rng);
    const CMatrix W = compute_precoder(H, PrecoderMethod::ZF, 0.0, 4.0).W;
    for (double v : closed_form_sinr(H, W, 0.0)) CHECK(std::isinf(v));
    for (double v : oracle::sinr_bruteforce(test::to_oracle(H), test::to_oracle(W), 0.0)) CHECK(std::isinf(v));

    CHECK(closed_form_sinr(CMatrix::Identity(4, 4), CMatrix::Identity(4, 4), 0.1)[2] == Approx(10.0));
}

TEST_CASE("relabelling terminals permutes the SINR")
{
    std::mt19937_64 rng(13);
    const CMatrix H = test::random_matrix(4, 4, rng);
    const CMatrix W = compute_precoder(H, PrecoderMethod::MMSE, 0.1, 4.0).W;
    Eigen::PermutationMatrix<4> P;
    P.indices() << 2, 0, 3, 1;
    const auto base = closed_form_sinr(H, W, 0.1);
    const auto perm = closed_form_sinr(P * H, W * P.transpose(), 0.1);
    for (int k = 0; k < 4; ++k) CHECK(perm[static_cast<std::size_t>(P.indices()(k))] == Approx(base[static_cast<std::size_t>(k)]).epsilon(1e-12));
}

TEST_CASE("CSI CSV rows")
{
    CsiReport r;
    r.ut = 1;
    r.t = 0.5;
    r.diff_phases = {0.25, 0.0};
    r.magnitudes = {0.5, 1.0};
    std::ostringstream out;
    write_csi_csv_header(out);
    write_csi_csv(out, r);
    CHECK(out.str() == "t,ut,j,psi_hat_rad,mag\n0.5,1,0,0.25,0.5\n0.5,1,1,0,1\n");
    CHECK(precoder_method_from_string("ZF") == PrecoderMethod::ZF);
    CHECK(to_string(PrecoderMethod::MMSE) == "mmse");
    CHECK_THROWS(precoder_method_from_string("svd"));
}
