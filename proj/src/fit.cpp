#include "ampex/fit.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <sstream>

#include "ampex/errors.hpp"
#include "ampex/rng.hpp"

namespace ampex {

namespace {
using MutableMap = Eigen::Map<Matrix>;
} // namespace

FitLayout FitLayout::mps_shape(int d, int m_deg, int m_bd) {
    if (d < 3) throw ConfigError("fit layout: mps_shape needs d >= 3");
    if (m_deg < 1 || m_bd < 0 || m_bd > m_deg)
        throw ConfigError("fit layout: need 0 <= m_bd <= m_deg");
    FitLayout layout;
    layout.kind = Kind::mps_shape;
    layout.d = d;
    layout.m_deg = m_deg;
    layout.m_bd = m_bd;
    return layout;
}

FitLayout FitLayout::sliding(int d, int m_deg, int m_bl) {
    if (d < 1 || m_deg < 1) throw ConfigError("fit layout: bad register shape");
    if (m_bl < 2 || m_bl > d * m_deg - 1)
        throw ConfigError("fit layout: m_bl must lie in [2, d*m_deg - 1]");
    FitLayout layout;
    layout.kind = Kind::sliding;
    layout.d = d;
    layout.m_deg = m_deg;
    layout.m_bl = m_bl;
    return layout;
}

int FitLayout::block_count() const {
    return kind == Kind::mps_shape ? d - 1 : d * m_deg - m_bl + 1;
}

int PauliString::y_count() const {
    int n = 0;
    for (auto letter : letters) n += (letter == 2);
    return n;
}

std::vector<PauliString> enumerate_real_pauli_strings(int m) {
    if (m < 1 || m > 12) throw ConfigError("pauli enumeration: width out of range");
    std::vector<PauliString> words;
    const std::int64_t total = std::int64_t{1} << (2 * m);
    for (std::int64_t code = 0; code < total; ++code) {
        PauliString word;
        word.letters.resize(static_cast<std::size_t>(m));
        std::int64_t c = code;
        for (int k = m - 1; k >= 0; --k) {
            word.letters[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(c & 3);
            c >>= 2;
        }
        if (word.y_count() % 2 == 0) words.push_back(std::move(word));
    }
    return words;
}

namespace {

struct PauliMasks {
    std::uint64_t flip = 0;  // X and Y letters
    std::uint64_t phase = 0; // Y and Z letters
    bool imaginary = false;  // odd #Y: sigma = i * (real orthogonal R)
    double overall = 1.0;    // i^{#Y}, divided by i when imaginary
};

PauliMasks masks_for(const PauliString& word) {
    PauliMasks m;
    const int width = word.width();
    int ys = 0;
    for (int k = 0; k < width; ++k) {
        const std::uint64_t bit = std::uint64_t{1} << (width - 1 - k);
        switch (word.letters[static_cast<std::size_t>(k)]) {
            case 0: break;
            case 1: m.flip |= bit; break;
            case 2:
                m.flip |= bit;
                m.phase |= bit;
                ++ys;
                break;
            case 3: m.phase |= bit; break;
            default: throw ConfigError("pauli word: letters must be 0..3");
        }
    }
    m.imaginary = (ys % 2 != 0);
    if (m.imaginary)
        m.overall = ((ys - 1) % 4 == 0) ? 1.0 : -1.0; // i^{#Y - 1}
    else
        m.overall = (ys % 4 == 0) ? 1.0 : -1.0; // i^{#Y}
    return m;
}

// <phi| sigma |psi> for even-Y words; Im <phi| sigma |psi> = <phi| R |psi>
// (R = -i sigma, real orthogonal) for odd-Y words.
double window_pauli_value(const StateVector& phi, const StateVector& psi, int start,
                          const PauliMasks& m, int width) {
    const int low = psi.n_qubits - start - width;
    const std::uint64_t flip_shifted = m.flip << low;
    const std::uint64_t window_mask = (std::uint64_t{1} << width) - 1;
    double acc = 0.0;
    const std::int64_t n = psi.size();
    for (std::int64_t idx = 0; idx < n; ++idx) {
        const std::uint64_t b = (static_cast<std::uint64_t>(idx) >> low) & window_mask;
        const double sign = (std::popcount(b & m.phase) & 1) ? -1.0 : 1.0;
        acc += phi.amps[static_cast<std::size_t>(idx) ^ flip_shifted] * sign *
               psi.amps[static_cast<std::size_t>(idx)];
    }
    return m.overall * acc;
}

void check_window(const StateVector& psi, int start, int width) {
    if (width < 1 || start < 0 || start + width > psi.n_qubits)
        throw ConfigError("window does not fit inside the register");
}

void check_normalized(const StateVector& v, const char* name) {
    if (std::abs(v.norm() - 1.0) > 1e-8)
        throw NumericError(std::string(name) + " is not normalized");
}

} // namespace

double pauli_expectation(const StateVector& phi, const StateVector& psi, int start,
                         const PauliString& word) {
    if (phi.n_qubits != psi.n_qubits) throw ConfigError("pauli_expectation: size mismatch");
    check_window(psi, start, word.width());
    const PauliMasks m = masks_for(word);
    if (m.imaginary)
        throw ConfigError("pauli_expectation: odd Y count is imaginary-valued on real states");
    return window_pauli_value(phi, psi, start, m, word.width());
}

std::pair<StateVector, StateVector> environments(const StateVector& target,
                                                 const BlockCircuit& circuit, int i) {
    const int blocks = static_cast<int>(circuit.gates.size());
    if (i < 1 || i > blocks) throw ConfigError("environments: block index out of range");
    if (target.n_qubits != circuit.n_qubits)
        throw ConfigError("environments: target size does not match the circuit");

    StateVector phi = StateVector::zero_state(circuit.n_qubits);
    for (int b = 0; b < i - 1; ++b) apply_gate_inplace(phi, circuit.gates[static_cast<std::size_t>(b)]);
    StateVector psi = target;
    for (int b = blocks - 1; b >= i; --b)
        apply_gate_inplace(psi, circuit.gates[static_cast<std::size_t>(b)], true);
    return {std::move(phi), std::move(psi)};
}

namespace {

// Window-major gather: rows are window labels, columns everything else.
Matrix gather_window(const StateVector& v, int start, int width) {
    const std::int64_t dim = std::int64_t{1} << width;
    const std::int64_t low = std::int64_t{1} << (v.n_qubits - start - width);
    const std::int64_t high = v.size() / (dim * low);
    Matrix out(dim, high * low);
    for (std::int64_t h = 0; h < high; ++h)
        for (std::int64_t a = 0; a < dim; ++a)
            for (std::int64_t l = 0; l < low; ++l)
                out(a, h * low + l) = v.amps[static_cast<std::size_t>((h * dim + a) * low + l)];
    return out;
}

} // namespace

Matrix assemble_fi_direct(const StateVector& phi, const StateVector& psi, int window_start,
                          int window_width) {
    if (phi.n_qubits != psi.n_qubits) throw ConfigError("assemble_fi: size mismatch");
    check_window(phi, window_start, window_width);
    const Matrix psi_mat = gather_window(psi, window_start, window_width);
    const Matrix phi_mat = gather_window(phi, window_start, window_width);
    return psi_mat * phi_mat.transpose();
}

Matrix assemble_fi_pauli(const StateVector& phi, const StateVector& psi, int window_start,
                         int window_width, Estimator estimator, std::int64_t shots,
                         std::uint64_t seed) {
    if (phi.n_qubits != psi.n_qubits) throw ConfigError("assemble_fi: size mismatch");
    check_window(phi, window_start, window_width);
    check_normalized(phi, "phi");
    check_normalized(psi, "psi");
    if (estimator == Estimator::shots && shots < 1)
        throw ConfigError("assemble_fi_pauli: shot count must be >= 1");

    const std::int64_t dim = std::int64_t{1} << window_width;
    const double inv_m = 1.0 / static_cast<double>(dim);
    Matrix fi = Matrix::Zero(dim, dim);

    // The even-Y words (the real set) are estimated with the real Hadamard
    // test and carry the symmetric half of F_i; the odd-Y words have purely
    // imaginary expectations on real states, so their imaginary-part test
    // supplies the antisymmetric half: i<sigma>_Im * sigma = -<R> R.
    const std::int64_t word_count = std::int64_t{1} << (2 * window_width);
    for (std::int64_t code = 0; code < word_count; ++code) {
        PauliString word;
        word.letters.resize(static_cast<std::size_t>(window_width));
        std::int64_t c = code;
        for (int k = window_width - 1; k >= 0; --k) {
            word.letters[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(c & 3);
            c >>= 2;
        }
        const PauliMasks m = masks_for(word);
        double value = window_pauli_value(phi, psi, window_start, m, window_width);
        if (estimator == Estimator::shots) {
            // Idealized Hadamard test: success probability (1 + value)/2 with
            // value the real (resp. imaginary) part of <phi|sigma|psi>.
            const double p = std::clamp(0.5 * (1.0 + value), 0.0, 1.0);
            Rng rng(derive_seed(seed, {0xadau, static_cast<std::uint64_t>(code)}));
            std::int64_t successes = 0;
            for (std::int64_t s = 0; s < shots; ++s) successes += (rng.uniform01() < p);
            value = 2.0 * static_cast<double>(successes) / static_cast<double>(shots) - 1.0;
        }
        const double coeff = (m.imaginary ? -value : value) * inv_m;
        for (std::int64_t b = 0; b < dim; ++b) {
            const double sign = (std::popcount(static_cast<std::uint64_t>(b) & m.phase) & 1)
                                    ? -1.0
                                    : 1.0;
            fi(b ^ static_cast<std::int64_t>(m.flip), b) += coeff * m.overall * sign;
        }
    }
    return fi;
}

Matrix update_block(const Matrix& fi) {
    if (!fi.allFinite()) throw NumericError("update_block: F_i has non-finite entries");
    const SvdResult f = svd(fi);
    return f.u * f.vt;
}

double fidelity(const BlockCircuit& circuit, const StateVector& target) {
    return dot(target, apply_circuit(circuit, StateVector::zero_state(circuit.n_qubits)));
}

namespace {

struct WindowSpec {
    int start;
    int width;
};

WindowSpec window_of(const FitLayout& layout, int block) {
    if (layout.kind == FitLayout::Kind::mps_shape) {
        const bool last = (block == layout.d - 2);
        return {block * layout.m_deg, last ? 2 * layout.m_deg : layout.m_deg + layout.m_bd};
    }
    return {block, layout.m_bl};
}

BlockCircuit initial_blocks(const FitLayout& layout, int working_qubits, std::uint64_t seed,
                            const BlockCircuit* initial) {
    BlockCircuit circuit;
    circuit.n_qubits = working_qubits;
    const int blocks = layout.block_count();
    if (initial) {
        if (static_cast<int>(initial->gates.size()) != blocks)
            throw ConfigError("run_fit: initial circuit block count does not match layout");
        for (int b = 0; b < blocks; ++b) {
            const auto spec = window_of(layout, b);
            const auto& gate = initial->gates[static_cast<std::size_t>(b)];
            if (gate.start != spec.start || gate.width != spec.width)
                throw ConfigError("run_fit: initial circuit window layout does not match");
            circuit.add(gate);
        }
        return circuit;
    }
    for (int b = 0; b < blocks; ++b) {
        const auto spec = window_of(layout, b);
        circuit.add(make_block_gate(
            spec.start, spec.width,
            haar_random_orthogonal(std::int64_t{1} << spec.width,
                                   derive_seed(seed, {0x1717u, static_cast<std::uint64_t>(b)}))));
    }
    return circuit;
}

// Full mode folds the fixed oracle layer into the target and moves the pad
// qubits of every register behind the degree qubits, after which each block
// window is contiguous on the leading d*m_deg qubits exactly as in coef mode.
StateVector fold_target_through_oracles(const StateVector& target, const FitLayout& layout,
                                        std::span<const OrthoBasis1D> bases) {
    if (static_cast<int>(bases.size()) != layout.d)
        throw ConfigError("run_fit(full): need one basis per dimension");
    const int m_gr = log2_exact(bases[0].grid_count);
    if (m_gr < 1) throw ConfigError("run_fit(full): n_gr must be a power of two");
    if (m_gr < layout.m_deg) throw ConfigError("run_fit(full): n_gr must be >= D");
    for (const auto& basis : bases) {
        if (basis.grid_count != bases[0].grid_count)
            throw ConfigError("run_fit(full): registers must share one n_gr");
        if (basis.degree != (std::int64_t{1} << layout.m_deg))
            throw ConfigError("run_fit(full): basis degree must equal D");
    }
    if (target.n_qubits != layout.d * m_gr)
        throw ConfigError("run_fit(full): target size does not match d*m_gr qubits");

    const std::int64_t pad = std::int64_t{1} << (m_gr - layout.m_deg);
    StateVector folded = target;
    for (int mode = 0; mode < layout.d; ++mode) {
        std::vector<Eigen::Index> positions(static_cast<std::size_t>(bases[0].degree));
        for (std::int64_t l = 0; l < bases[0].degree; ++l)
            positions[static_cast<std::size_t>(l)] = l * pad;
        Matrix basis_cols(bases[0].grid_count, bases[0].degree);
        const auto& basis = bases[static_cast<std::size_t>(mode)];
        for (std::int64_t l = 0; l < basis.degree; ++l)
            for (std::int64_t j = 0; j < basis.grid_count; ++j)
                basis_cols(j, l) = basis.eval_fn(l, basis.grid[static_cast<std::size_t>(j)]) /
                                   std::sqrt(basis.c[static_cast<std::size_t>(l)]);
        BlockGate gate = make_block_gate(mode * m_gr, m_gr,
                                         complete_to_unitary_at(basis_cols, positions));
        apply_gate_inplace(folded, gate, true);
    }
    if (pad == 1) return folded;

    // Permute (deg_1 pad_1 ... deg_d pad_d) -> (deg_1 ... deg_d pad_1 ... pad_d).
    const int pad_bits = m_gr - layout.m_deg;
    StateVector out = StateVector::zero_state(target.n_qubits);
    out.amps.assign(folded.amps.size(), 0.0);
    const std::int64_t n = folded.size();
    for (std::int64_t idx = 0; idx < n; ++idx) {
        std::int64_t degs = 0;
        std::int64_t pads = 0;
        for (int mode = 0; mode < layout.d; ++mode) {
            const std::int64_t reg =
                (idx >> ((layout.d - 1 - mode) * m_gr)) & ((std::int64_t{1} << m_gr) - 1);
            degs = (degs << layout.m_deg) | (reg >> pad_bits);
            pads = (pads << pad_bits) | (reg & (pad - 1));
        }
        out.amps[static_cast<std::size_t>((degs << (layout.d * pad_bits)) | pads)] =
            folded.amps[static_cast<std::size_t>(idx)];
    }
    return out;
}

} // namespace

FitReport run_fit(const StateVector& target, const FitLayout& layout, const FitConfig& config,
                  std::span<const OrthoBasis1D> bases, const BlockCircuit* initial) {
    const auto t_start = std::chrono::steady_clock::now();
    if (config.n_iter < 1) throw ConfigError("run_fit: n_iter must be >= 1");
    if (config.estimator == Estimator::shots && config.shots < 1)
        throw ConfigError("run_fit: shot count must be >= 1");

    StateVector working_target;
    if (config.mode == FitMode::full) {
        working_target = fold_target_through_oracles(target, layout, bases);
    } else {
        if (target.n_qubits != layout.compact_qubits())
            throw ConfigError("run_fit(coef): target size does not match d*m_deg qubits");
        working_target = target;
    }
    if (std::abs(working_target.norm() - 1.0) > 1e-8)
        throw NumericError("run_fit: target state is not normalized");

    BlockCircuit circuit = initial_blocks(layout, working_target.n_qubits, config.seed, initial);
    const int blocks = layout.block_count();

    FitReport report;
    const std::int64_t window_dim_sum = [&] {
        std::int64_t sum = 0;
        for (int b = 0; b < blocks; ++b) sum += std::int64_t{1} << (2 * window_of(layout, b).width);
        return sum;
    }();

    double last_sweep_fidelity = fidelity(circuit, working_target);
    for (int sweep = 1; sweep <= config.n_iter; ++sweep) {
        const bool reverse = config.back_and_forth && (sweep % 2 == 0);

        // Environment cache for the fixed side of this sweep; the moving side
        // is maintained incrementally. Valid because a forward sweep never
        // touches blocks above the current one (and vice versa).
        std::vector<StateVector> fixed(static_cast<std::size_t>(blocks) + 1);
        if (!reverse) {
            fixed[static_cast<std::size_t>(blocks)] = working_target;
            for (int b = blocks - 1; b >= 0; --b) {
                fixed[static_cast<std::size_t>(b)] = fixed[static_cast<std::size_t>(b) + 1];
                apply_gate_inplace(fixed[static_cast<std::size_t>(b)],
                                   circuit.gates[static_cast<std::size_t>(b)], true);
            }
        } else {
            fixed[0] = StateVector::zero_state(working_target.n_qubits);
            for (int b = 0; b < blocks; ++b) {
                fixed[static_cast<std::size_t>(b) + 1] = fixed[static_cast<std::size_t>(b)];
                apply_gate_inplace(fixed[static_cast<std::size_t>(b) + 1],
                                   circuit.gates[static_cast<std::size_t>(b)]);
            }
        }

        StateVector moving = reverse ? working_target
                                     : StateVector::zero_state(working_target.n_qubits);
        for (int step = 0; step < blocks; ++step) {
            const int b = reverse ? blocks - 1 - step : step;
            const auto spec = window_of(layout, b);
            const StateVector& phi = reverse ? fixed[static_cast<std::size_t>(b)] : moving;
            const StateVector& psi = reverse ? moving : fixed[static_cast<std::size_t>(b) + 1];

            Matrix fi;
            if (config.estimator == Estimator::exact) {
                fi = assemble_fi_direct(phi, psi, spec.start, spec.width);
            } else {
                fi = assemble_fi_pauli(phi, psi, spec.start, spec.width, Estimator::shots,
                                       config.shots,
                                       derive_seed(config.seed,
                                                   {static_cast<std::uint64_t>(sweep),
                                                    static_cast<std::uint64_t>(b)}));
                report.total_shots += static_cast<std::uint64_t>(config.shots) *
                                      (std::uint64_t{1} << (2 * spec.width));
            }

            double step_fidelity;
            if (config.estimator == Estimator::exact) {
                // Nuclear norm of the exact F_i: the fidelity the polar update
                // attains, so no end-to-end pass is needed.
                const SvdResult f = svd(fi);
                circuit.gates[static_cast<std::size_t>(b)].matrix = f.u * f.vt;
                step_fidelity = f.s.sum();
            } else {
                circuit.gates[static_cast<std::size_t>(b)].matrix = update_block(fi);
                step_fidelity = fidelity(circuit, working_target);
            }
            if (std::isnan(step_fidelity)) {
                std::ostringstream msg;
                msg << "run_fit: fidelity became NaN at sweep " << sweep << ", block " << b + 1;
                throw NumericError(msg.str());
            }
            report.trace.push_back({sweep, b + 1, step_fidelity});
            if (config.progress) config.progress(sweep, b + 1, step_fidelity);
            apply_gate_inplace(moving, circuit.gates[static_cast<std::size_t>(b)], reverse);
        }
        report.pauli_terms += (config.estimator == Estimator::shots)
                                  ? static_cast<std::uint64_t>(window_dim_sum)
                                  : 0;

        const double sweep_fidelity = report.trace.back().fidelity;
        report.sweep_fidelity.push_back(sweep_fidelity);
        if (config.early_stop_tol &&
            sweep_fidelity - last_sweep_fidelity < *config.early_stop_tol)
            break;
        last_sweep_fidelity = sweep_fidelity;
    }

    report.final_fidelity = fidelity(circuit, working_target);
    if (layout.kind == FitLayout::Kind::mps_shape) {
        BlockCircuit compact;
        compact.n_qubits = layout.compact_qubits();
        for (const auto& gate : circuit.gates) compact.add(gate);
        Mps extracted = extract_mps(compact);
        report.mps = (config.mode == FitMode::full) ? from_grid_gauge(extracted, bases)
                                                    : std::move(extracted);
    }
    report.circuit = std::move(circuit);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

FitReport run_fit(const GridTensor& target, const FitLayout& layout, const FitConfig& config,
                  std::span<const OrthoBasis1D> bases, const BlockCircuit* initial) {
    StateVector state = to_statevector(target);
    state.normalize();
    return run_fit(state, layout, config, bases, initial);
}

} // namespace ampex
