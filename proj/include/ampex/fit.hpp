#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ampex/circuit.hpp"
#include "ampex/grid_tensor.hpp"
#include "ampex/linalg.hpp"
#include "ampex/mps.hpp"
#include "ampex/ortho.hpp"

namespace ampex {

enum class FitMode {
    coef, ///< target is the normalized coefficient state |a>
    full  ///< target is |f> on the grid registers, reached through the oracles
};

enum class Estimator {
    exact, ///< environments contracted exactly
    shots  ///< idealized Hadamard test, N Bernoulli draws per Pauli term
};

struct FitConfig {
    FitMode mode = FitMode::coef;
    Estimator estimator = Estimator::exact;
    std::int64_t shots = 1024; ///< per-term draw count when estimator == shots
    int n_iter = 1;
    std::uint64_t seed = 0;
    std::optional<double> early_stop_tol; ///< stop when a sweep gains less than this
    bool back_and_forth = false;          ///< alternate sweep direction (off: forward only)
    std::function<void(int sweep, int block, double fidelity)> progress; ///< per update
};

/// Shape of the optimizable part of the circuit; gates act on the first
/// d*m_deg qubits of the working register.
struct FitLayout {
    enum class Kind { mps_shape, sliding };
    Kind kind = Kind::mps_shape;
    int d = 0;
    int m_deg = 0;
    int m_bd = 0; ///< mps_shape only
    int m_bl = 0; ///< sliding only

    static FitLayout mps_shape(int d, int m_deg, int m_bd);
    static FitLayout sliding(int d, int m_deg, int m_bl);
    int compact_qubits() const { return d * m_deg; }
    int block_count() const;
};

/// Pauli word on m window qubits; letters are 0=I, 1=X, 2=Y, 3=Z, letter 0
/// acting on the window's most significant qubit.
struct PauliString {
    std::vector<std::uint8_t> letters;
    int width() const { return static_cast<int>(letters.size()); }
    int y_count() const;
};

/// All 4^m words with an even number of Y letters - exactly the ones with
/// real matrix elements, M(M+1)/2 of them for M = 2^m.
std::vector<PauliString> enumerate_real_pauli_strings(int m);

/// <phi| sigma |psi> for an even-Y word acting on the window starting at
/// `start`. Odd-Y words are refused (imaginary-valued on real states).
double pauli_expectation(const StateVector& phi, const StateVector& psi, int start,
                         const PauliString& word);

/// Environment pair around block i (1-based): phi carries blocks 1..i-1
/// applied to |0...0>, psi carries the adjoints of all later blocks applied
/// to the target, so <psi|(V_i (x) I)|phi> telescopes to <target|circuit|0>.
std::pair<StateVector, StateVector> environments(const StateVector& target,
                                                 const BlockCircuit& circuit, int i);

/// Effective block matrix (F_i)_{ab} = sum_rest psi[a,rest] phi[b,rest],
/// i.e. the partial trace of |psi><phi| onto the window.
Matrix assemble_fi_direct(const StateVector& phi, const StateVector& psi, int window_start,
                          int window_width);

/// Same matrix assembled from its Pauli expansion, one (exact or shot-based)
/// Hadamard-test estimate per word. Even-Y words use the real-part test and
/// carry the symmetric half of F_i; odd-Y words have exactly zero real
/// coefficient on real states, and the imaginary-part test on them supplies
/// the antisymmetric half.
Matrix assemble_fi_pauli(const StateVector& phi, const StateVector& psi, int window_start,
                         int window_width, Estimator estimator, std::int64_t shots,
                         std::uint64_t seed);

/// Fidelity-optimal orthogonal update X*Yt from F_i = X diag(s) Yt; the local
/// fidelity it attains is the nuclear norm sum(s).
Matrix update_block(const Matrix& fi);

/// <target|circuit|0...0>.
double fidelity(const BlockCircuit& circuit, const StateVector& target);

struct FitTraceRow {
    int sweep = 0;
    int block = 0;
    double fidelity = 0.0;
};

struct FitReport {
    std::vector<FitTraceRow> trace;     ///< fidelity after every block update
    std::vector<double> sweep_fidelity; ///< fidelity at the end of each sweep
    double final_fidelity = 0.0;
    BlockCircuit circuit;               ///< optimized blocks on the compact register
    std::optional<Mps> mps;             ///< extracted for mps_shape layouts, coefficient gauge
    double wall_seconds = 0.0;
    std::uint64_t pauli_terms = 0;
    std::uint64_t total_shots = 0;
};

/// Alternating block optimization. The target is |a> on d*m_deg qubits in
/// coef mode, or |f> on d*m_gr qubits in full mode (bases required; the
/// oracle layer is fixed and applied to the target up front). Blocks start
/// from `initial` when given, otherwise Haar-random from the seed.
FitReport run_fit(const StateVector& target, const FitLayout& layout, const FitConfig& config,
                  std::span<const OrthoBasis1D> bases = {},
                  const BlockCircuit* initial = nullptr);

/// Convenience overload: normalizes the tensor into the target state
/// (coefficients in coef mode, grid values in full mode).
FitReport run_fit(const GridTensor& target, const FitLayout& layout, const FitConfig& config,
                  std::span<const OrthoBasis1D> bases = {},
                  const BlockCircuit* initial = nullptr);

} // namespace ampex
