#include "ampex/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ampex/errors.hpp"
#include "ampex/rng.hpp"

namespace ampex {

namespace {
using MutableMap = Eigen::Map<Matrix>;
} // namespace

int log2_exact(std::int64_t v) {
    if (v < 1 || (v & (v - 1)) != 0) return -1;
    int bits = 0;
    while ((std::int64_t{1} << bits) < v) ++bits;
    return bits;
}

StateVector StateVector::zero_state(int n_qubits) {
    return basis_state(n_qubits, 0);
}

StateVector StateVector::basis_state(int n_qubits, std::int64_t index) {
    if (n_qubits < 1 || n_qubits > 30) throw ConfigError("StateVector: qubit count out of range");
    StateVector psi;
    psi.n_qubits = n_qubits;
    psi.amps.assign(std::size_t{1} << n_qubits, 0.0);
    psi.amps.at(static_cast<std::size_t>(index)) = 1.0;
    return psi;
}

double StateVector::norm() const {
    double sq = 0.0;
    for (double a : amps) sq += a * a;
    return std::sqrt(sq);
}

void StateVector::normalize() {
    const double n = norm();
    if (n == 0.0) throw NumericError("StateVector: cannot normalize the zero vector");
    for (double& a : amps) a /= n;
}

double dot(const StateVector& a, const StateVector& b) {
    if (a.n_qubits != b.n_qubits) throw ConfigError("dot: qubit counts differ");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.amps.size(); ++i) sum += a.amps[i] * b.amps[i];
    return sum;
}

BlockGate make_block_gate(int start, int width, Matrix matrix) {
    if (width < 1 || width > 24) throw ConfigError("block gate: width out of range");
    const std::int64_t dim = std::int64_t{1} << width;
    if (matrix.rows() != dim || matrix.cols() != dim)
        throw ConfigError("block gate: matrix does not match 2^width");
    const double dev = orthogonality_deviation(matrix);
    if (dev > 1e-10) {
        std::ostringstream msg;
        msg << "block gate: matrix not orthogonal (deviation " << dev << ")";
        throw NumericError(msg.str());
    }
    return BlockGate{start, width, std::move(matrix)};
}

void BlockCircuit::add(BlockGate gate) {
    if (gate.start < 0 || gate.start + gate.width > n_qubits)
        throw ConfigError("block gate window does not fit inside the register");
    gates.push_back(std::move(gate));
}

void apply_gate_inplace(StateVector& psi, const BlockGate& gate, bool adjoint) {
    if (gate.start < 0 || gate.start + gate.width > psi.n_qubits)
        throw ConfigError("apply: gate window out of range");
    const std::int64_t dim = std::int64_t{1} << gate.width;
    const std::int64_t low = std::int64_t{1} << (psi.n_qubits - gate.start - gate.width);
    const std::int64_t high = std::int64_t{1} << gate.start;

    // With qubit 0 as MSB the slice for a fixed prefix is a contiguous
    // row-major (dim x low) matrix; each slice takes one GEMM.
    Matrix scratch(dim, low);
    for (std::int64_t h = 0; h < high; ++h) {
        MutableMap slice(psi.amps.data() + h * dim * low, dim, low);
        if (adjoint)
            scratch.noalias() = gate.matrix.transpose() * slice;
        else
            scratch.noalias() = gate.matrix * slice;
        slice = scratch;
    }
}

StateVector apply_circuit(const BlockCircuit& circuit, const StateVector& psi, bool adjoint) {
    if (circuit.n_qubits != psi.n_qubits)
        throw ConfigError("apply_circuit: circuit and state qubit counts differ");
    StateVector out = psi;
    if (!adjoint) {
        for (const auto& gate : circuit.gates) apply_gate_inplace(out, gate, false);
    } else {
        for (auto it = circuit.gates.rbegin(); it != circuit.gates.rend(); ++it)
            apply_gate_inplace(out, *it, true);
    }
    return out;
}

namespace {

struct MpsCircuitShape {
    int d;
    int m_deg;
    int m_bd;
    std::int64_t phys;
    std::int64_t bond;
};

MpsCircuitShape vmps_shape_for(const Mps& mps) {
    MpsCircuitShape s{};
    s.d = static_cast<int>(mps.order());
    s.phys = mps.phys();
    s.bond = mps.bonds()[0];
    for (std::int64_t b : mps.bonds())
        if (b != s.bond)
            throw ConfigError("build_vmps: bond extents must be uniform for the circuit layout");
    s.m_deg = log2_exact(s.phys);
    s.m_bd = log2_exact(s.bond);
    if (s.m_deg < 1) throw ConfigError("build_vmps: D must be a power of two (>= 2)");
    if (s.m_bd < 0) throw ConfigError("build_vmps: r must be a power of two");
    if (s.m_bd > s.m_deg)
        throw ConfigError("build_vmps: r > D, bond qubits would not fit the next register");
    return s;
}

// Block matrix for core i: specified columns hold the core slices, free
// columns are a deterministic completion.
Matrix vmps_block(const Mps& mps, const MpsCircuitShape& s, std::int64_t i) {
    const auto shape = mps.core_shape(i);
    const bool last = (i == mps.core_count() - 1);
    const std::int64_t dim = shape[1] * (last ? s.phys : s.bond); // D*r or D^2
    const std::int64_t in_stride = last ? (s.phys * s.phys / s.bond) : s.phys;

    Matrix b(dim, shape[0]);
    const double* core = mps.core(i).data();
    for (std::int64_t left = 0; left < shape[0]; ++left)
        for (std::int64_t l = 0; l < shape[1]; ++l)
            for (std::int64_t right = 0; right < shape[2]; ++right)
                b(l * shape[2] + right, left) = core[(left * shape[1] + l) * shape[2] + right];

    std::vector<Eigen::Index> positions(static_cast<std::size_t>(shape[0]));
    for (std::int64_t left = 0; left < shape[0]; ++left)
        positions[static_cast<std::size_t>(left)] = (i == 0) ? 0 : left * in_stride;
    return complete_to_unitary_at(b, positions);
}

} // namespace

BlockCircuit build_vmps(const Mps& mps) {
    const MpsCircuitShape s = vmps_shape_for(mps);
    const double norm_err = std::abs(mps.norm() - 1.0);
    if (norm_err > 1e-10) {
        std::ostringstream msg;
        msg << "build_vmps: MPS must have unit norm (|norm - 1| = " << norm_err << ")";
        throw NumericError(msg.str());
    }
    if (check_right_canonical(mps) > 1e-10)
        throw NumericError("build_vmps: MPS must be right-canonical");

    BlockCircuit circuit;
    circuit.n_qubits = s.d * s.m_deg;
    for (std::int64_t i = 0; i < mps.core_count(); ++i) {
        const bool last = (i == mps.core_count() - 1);
        const int width = last ? 2 * s.m_deg : s.m_deg + s.m_bd;
        circuit.add(make_block_gate(static_cast<int>(i) * s.m_deg, width, vmps_block(mps, s, i)));
    }
    return circuit;
}

Mps extract_mps(const BlockCircuit& circuit) {
    const auto blocks = static_cast<std::int64_t>(circuit.gates.size());
    if (blocks < 2) throw ConfigError("extract_mps: circuit has fewer than two blocks");
    const int d = static_cast<int>(blocks) + 1;
    const int m_deg = circuit.gates[1].start - circuit.gates[0].start;
    if (m_deg < 1) throw ConfigError("extract_mps: block starts are not an MPS staircase");
    const int last_width = circuit.gates.back().width;
    if (last_width != 2 * m_deg)
        throw ConfigError("extract_mps: last block must span two degree registers");
    const int m_bd = circuit.gates[0].width - m_deg;
    if (m_bd < 0 || m_bd > m_deg) throw ConfigError("extract_mps: block widths are inconsistent");
    if (circuit.n_qubits != d * m_deg)
        throw ConfigError("extract_mps: qubit count does not match the staircase layout");
    for (std::int64_t i = 0; i < blocks; ++i) {
        const bool last = (i == blocks - 1);
        if (circuit.gates[static_cast<std::size_t>(i)].start != i * m_deg ||
            circuit.gates[static_cast<std::size_t>(i)].width !=
                (last ? 2 * m_deg : m_deg + m_bd))
            throw ConfigError("extract_mps: block windows do not match the staircase layout");
    }

    const std::int64_t phys = std::int64_t{1} << m_deg;
    const std::int64_t bond = std::int64_t{1} << m_bd;
    std::vector<std::vector<double>> cores(static_cast<std::size_t>(blocks));
    for (std::int64_t i = 0; i < blocks; ++i) {
        const bool last = (i == blocks - 1);
        const std::int64_t left = (i == 0) ? 1 : bond;
        const std::int64_t right = last ? phys : bond;
        const std::int64_t in_stride = last ? (phys * phys / bond) : phys;
        const Matrix& v = circuit.gates[static_cast<std::size_t>(i)].matrix;
        auto& core = cores[static_cast<std::size_t>(i)];
        core.resize(static_cast<std::size_t>(left * phys * right));
        for (std::int64_t k = 0; k < left; ++k)
            for (std::int64_t l = 0; l < phys; ++l)
                for (std::int64_t kp = 0; kp < right; ++kp)
                    core[static_cast<std::size_t>((k * phys + l) * right + kp)] =
                        v(l * right + kp, (i == 0) ? 0 : k * in_stride);
    }
    return Mps(d, phys, std::vector<std::int64_t>(static_cast<std::size_t>(d - 2), bond),
               std::move(cores));
}

namespace {

Matrix vof_columns(const OrthoBasis1D& basis) {
    Matrix b(basis.grid_count, basis.degree);
    for (std::int64_t l = 0; l < basis.degree; ++l) {
        const double scale = 1.0 / std::sqrt(basis.c[static_cast<std::size_t>(l)]);
        for (std::int64_t j = 0; j < basis.grid_count; ++j)
            b(j, l) = scale * basis.eval_fn(l, basis.grid[static_cast<std::size_t>(j)]);
    }
    return b;
}

int vof_width(const OrthoBasis1D& basis) {
    const int m_gr = log2_exact(basis.grid_count);
    if (m_gr < 1) throw ConfigError("V_OF: n_gr must be a power of two (>= 2)");
    const double dev = check_discrete_orthogonality(basis);
    if (dev > 1e-9) {
        std::ostringstream msg;
        msg << "V_OF: discrete orthogonality violated (deviation " << dev << ")";
        throw NumericError(msg.str());
    }
    return m_gr;
}

} // namespace

BlockGate build_vof(const OrthoBasis1D& basis) {
    const int m_gr = vof_width(basis);
    std::vector<Eigen::Index> positions(static_cast<std::size_t>(basis.degree));
    for (std::int64_t l = 0; l < basis.degree; ++l) positions[static_cast<std::size_t>(l)] = l;
    return make_block_gate(0, m_gr, complete_to_unitary_at(vof_columns(basis), positions));
}

BlockCircuit build_vof_assembly(const OrthoBasis1D& basis) {
    const int m_gr = vof_width(basis);
    const std::int64_t n_gr = basis.grid_count;
    const Matrix cols = vof_columns(basis);

    BlockCircuit circuit;
    circuit.n_qubits = 2 * m_gr;
    const std::int64_t dim = n_gr * n_gr;

    // Controlled prepares: |l><l| (x) V_{P_l} + sum_{l' != l} |l'><l'| (x) I.
    std::vector<Matrix> prepare(static_cast<std::size_t>(basis.degree));
    for (std::int64_t l = 0; l < basis.degree; ++l) {
        prepare[static_cast<std::size_t>(l)] =
            complete_to_unitary_at(cols.col(l), {Eigen::Index{0}});
        Matrix gate = Matrix::Identity(dim, dim);
        gate.block(l * n_gr, l * n_gr, n_gr, n_gr) = prepare[static_cast<std::size_t>(l)];
        circuit.add(make_block_gate(0, 2 * m_gr, std::move(gate)));
    }

    // Resets: (V^l_set)^dag (x) |P_l><P_l| + I (x) (I - |P_l><P_l|), with
    // V^l_set the X-gate pattern writing l, i.e. XOR by l.
    for (std::int64_t l = 0; l < basis.degree; ++l) {
        const Vector p = cols.col(l);
        Matrix gate = Matrix::Zero(dim, dim);
        for (std::int64_t a = 0; a < n_gr; ++a) {
            for (std::int64_t j = 0; j < n_gr; ++j)
                for (std::int64_t jp = 0; jp < n_gr; ++jp) {
                    const double proj = p(j) * p(jp);
                    gate((a ^ l) * n_gr + j, a * n_gr + jp) += proj;
                    gate(a * n_gr + j, a * n_gr + jp) += (j == jp ? 1.0 : 0.0) - proj;
                }
        }
        circuit.add(make_block_gate(0, 2 * m_gr, std::move(gate)));
    }

    Matrix swap = Matrix::Zero(dim, dim);
    for (std::int64_t j1 = 0; j1 < n_gr; ++j1)
        for (std::int64_t j2 = 0; j2 < n_gr; ++j2) swap(j2 * n_gr + j1, j1 * n_gr + j2) = 1.0;
    circuit.add(make_block_gate(0, 2 * m_gr, std::move(swap)));
    return circuit;
}

namespace {

Mps rescale_modes(const Mps& mps, std::span<const OrthoBasis1D> bases, bool invert) {
    if (static_cast<std::int64_t>(bases.size()) != mps.order())
        throw ConfigError("grid gauge: need one basis per mode");
    std::vector<std::vector<double>> cores;
    cores.reserve(static_cast<std::size_t>(mps.core_count()));
    for (std::int64_t i = 0; i < mps.core_count(); ++i)
        cores.emplace_back(mps.core(i).begin(), mps.core(i).end());

    auto weight = [&](std::int64_t mode, std::int64_t l) {
        const double w = std::sqrt(bases[static_cast<std::size_t>(mode)].c[static_cast<std::size_t>(l)]);
        return invert ? 1.0 / w : w;
    };
    for (std::int64_t i = 0; i < mps.core_count(); ++i) {
        const auto shape = mps.core_shape(i);
        auto& core = cores[static_cast<std::size_t>(i)];
        const bool last = (i == mps.core_count() - 1);
        for (std::int64_t k = 0; k < shape[0]; ++k)
            for (std::int64_t l = 0; l < shape[1]; ++l)
                for (std::int64_t kp = 0; kp < shape[2]; ++kp) {
                    double w = weight(i, l);
                    if (last) w *= weight(i + 1, kp); // second physical index
                    core[static_cast<std::size_t>((k * shape[1] + l) * shape[2] + kp)] *= w;
                }
    }
    return Mps(mps.order(), mps.phys(), mps.bonds(), std::move(cores));
}

} // namespace

Mps to_grid_gauge(const Mps& mps, std::span<const OrthoBasis1D> bases) {
    Mps scaled = rescale_modes(mps, bases, false);
    right_canonicalize_inplace(scaled);
    const double norm = scaled.norm();
    if (norm == 0.0) throw NumericError("to_grid_gauge: zero state");
    scaled.scale(1.0 / norm);
    return scaled;
}

Mps from_grid_gauge(const Mps& mps, std::span<const OrthoBasis1D> bases) {
    Mps unscaled = rescale_modes(mps, bases, true);
    right_canonicalize_inplace(unscaled);
    return unscaled;
}

namespace {

// Widen a compact (phys x bond) block with pad qubits sitting between the
// degree bits and the bond bits; the pad bits pass through untouched.
Matrix widen_block(const Matrix& v, std::int64_t front, std::int64_t pad, std::int64_t tail) {
    const std::int64_t dim = front * pad * tail;
    Matrix w = Matrix::Zero(dim, dim);
    for (std::int64_t a = 0; a < front; ++a)
        for (std::int64_t ap = 0; ap < front; ++ap)
            for (std::int64_t b = 0; b < tail; ++b)
                for (std::int64_t bp = 0; bp < tail; ++bp) {
                    const double value = v(a * tail + b, ap * tail + bp);
                    if (value == 0.0) continue;
                    for (std::int64_t p = 0; p < pad; ++p)
                        w((a * pad + p) * tail + b, (ap * pad + p) * tail + bp) = value;
                }
    return w;
}

} // namespace

BlockCircuit build_vapp(const Mps& mps, std::span<const OrthoBasis1D> bases) {
    if (static_cast<std::int64_t>(bases.size()) != mps.order())
        throw ConfigError("build_vapp: need one basis per mode");
    const std::int64_t n_gr = bases[0].grid_count;
    for (const auto& basis : bases) {
        if (basis.grid_count != n_gr)
            throw ConfigError("build_vapp: registers must share a single n_gr");
        if (basis.degree != mps.phys())
            throw ConfigError("build_vapp: basis degree must equal the MPS physical extent");
    }
    const int m_gr = vof_width(bases[0]);
    const int m_deg = log2_exact(mps.phys());
    if (m_deg < 1) throw ConfigError("build_vapp: D must be a power of two");
    if (m_gr < m_deg) throw ConfigError("build_vapp: n_gr must be >= D");

    // The oracle columns carry 1/sqrt(c_l); pre-scaling the cores by
    // sqrt(c_l) cancels that, so the final amplitudes are the plain expansion
    // values of the input MPS, normalized.
    const Mps scaled = to_grid_gauge(mps, bases);
    const BlockCircuit compact = build_vmps(scaled);
    const MpsCircuitShape s = vmps_shape_for(scaled);

    BlockCircuit circuit;
    circuit.n_qubits = static_cast<int>(mps.order()) * m_gr;
    const std::int64_t pad = std::int64_t{1} << (m_gr - m_deg);
    for (std::size_t i = 0; i < compact.gates.size(); ++i) {
        const bool last = (i == compact.gates.size() - 1);
        const Matrix& v = compact.gates[i].matrix;
        const int start = static_cast<int>(i) * m_gr;
        if (pad == 1) {
            circuit.add(make_block_gate(start, compact.gates[i].width, v));
        } else {
            const std::int64_t tail = last ? s.phys : s.bond;
            const int width = m_gr + (last ? m_deg : s.m_bd);
            circuit.add(make_block_gate(start, width, widen_block(v, s.phys, pad, tail)));
        }
    }
    for (std::int64_t mode = 0; mode < mps.order(); ++mode) {
        // After the staircase, register `mode` holds l on its leading m_deg
        // bits, i.e. basis index l * pad; place the oracle columns there.
        std::vector<Eigen::Index> positions(static_cast<std::size_t>(mps.phys()));
        for (std::int64_t l = 0; l < mps.phys(); ++l)
            positions[static_cast<std::size_t>(l)] = l * pad;
        Matrix gate = complete_to_unitary_at(vof_columns(bases[static_cast<std::size_t>(mode)]),
                                             positions);
        circuit.add(make_block_gate(static_cast<int>(mode) * m_gr, m_gr, std::move(gate)));
    }
    return circuit;
}

BlockCircuit build_sliding_circuit(int d, int m_deg, int m_bl, std::uint64_t seed) {
    const int n = d * m_deg;
    if (n < 2) throw ConfigError("sliding circuit: register too small");
    if (m_bl < 2 || m_bl > n - 1)
        throw ConfigError("sliding circuit: m_bl must lie in [2, d*m_deg - 1]");
    BlockCircuit circuit;
    circuit.n_qubits = n;
    for (int t = 0; t + m_bl <= n; ++t) {
        const std::int64_t dim = std::int64_t{1} << m_bl;
        circuit.add(make_block_gate(
            t, m_bl, haar_random_orthogonal(dim, derive_seed(seed, {11u, static_cast<std::uint64_t>(t)}))));
    }
    return circuit;
}

std::int64_t sliding_dof(int d, int m_deg, int m_bl) {
    const int n = d * m_deg;
    if (m_bl < 2 || m_bl > n - 1)
        throw ConfigError("sliding_dof: m_bl must lie in [2, d*m_deg - 1]");
    return (std::int64_t{1} << m_bl) +
           (std::int64_t{1} << (2 * m_bl - 1)) * static_cast<std::int64_t>(n - m_bl);
}

StateVector to_statevector(const GridTensor& tensor) {
    int n = 0;
    for (std::int64_t extent : tensor.dims()) {
        const int bits = log2_exact(extent);
        if (bits < 0) throw ConfigError("to_statevector: extents must be powers of two");
        n += bits;
    }
    StateVector psi;
    psi.n_qubits = n;
    psi.amps.assign(tensor.entries().begin(), tensor.entries().end());
    return psi;
}

} // namespace ampex
