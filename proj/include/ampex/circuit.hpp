#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ampex/grid_tensor.hpp"
#include "ampex/linalg.hpp"
#include "ampex/mps.hpp"
#include "ampex/ortho.hpp"

namespace ampex {

/// Real statevector on n qubits. Qubit 0 is the most significant bit of the
/// basis index, so a register of width m starting at qubit q occupies a
/// contiguous MSB-ordered slice and |l1>|l2>...|ld> sits at index
/// l1 D^{d-1} + ... + ld.
struct StateVector {
    int n_qubits = 0;
    std::vector<double> amps;

    static StateVector zero_state(int n_qubits);
    static StateVector basis_state(int n_qubits, std::int64_t index);

    std::int64_t size() const { return static_cast<std::int64_t>(amps.size()); }
    double norm() const;
    void normalize(); ///< throws NumericError on a zero vector
};

double dot(const StateVector& a, const StateVector& b);

/// Orthogonal gate acting on the contiguous qubit window
/// [start, start+width).
struct BlockGate {
    int start = 0;
    int width = 0;
    Matrix matrix;
};

/// Validates orthogonality (1e-10) and window bounds.
BlockGate make_block_gate(int start, int width, Matrix matrix);

struct BlockCircuit {
    int n_qubits = 0;
    std::vector<BlockGate> gates;

    void add(BlockGate gate);
};

/// Applies each block in order (adjoint: transposed blocks in reverse order)
/// to its window. Norm is preserved.
StateVector apply_circuit(const BlockCircuit& circuit, const StateVector& psi,
                          bool adjoint = false);
void apply_gate_inplace(StateVector& psi, const BlockGate& gate, bool adjoint = false);

/// Staircase circuit on d*m_deg qubits whose blocks embed the cores of a
/// unit-norm right-canonical MPS; applying it to |0...0> produces the MPS
/// amplitudes. Within a block window the physical index takes the leading
/// m_deg bits and the bond index the trailing m_BD bits, so core entries sit
/// at row l*r + k; input bond labels enter on the leading bits of the next
/// window, i.e. column k*D (last block: column k*D^2/r). Unused columns are
/// completed deterministically; they never see amplitude.
BlockCircuit build_vmps(const Mps& mps);

/// Reads the designated block entries back into an MPS; inverse of
/// build_vmps up to the unused-column gauge.
Mps extract_mps(const BlockCircuit& circuit);

/// Orthogonal-function oracle on m_gr qubits: column l (l < D) holds the
/// normalized grid values of P_l; remaining columns are completed.
BlockGate build_vof(const OrthoBasis1D& basis);

/// Oracle assembly from controlled state preparations on two m_gr-qubit
/// registers: D controlled-prepare blocks, D reset blocks, then a register
/// swap. The pre-swap prefix maps |l>|0> to |0>|P_l>; the full circuit acts
/// as build_vof on the first register with the second as ancilla.
BlockCircuit build_vof_assembly(const OrthoBasis1D& basis);

/// Full approximation circuit on d*m_gr qubits: the MPS staircase on the
/// degree sub-registers (pad qubits pass through), then one oracle per
/// register. Applying it to |0...0> yields the grid values of the represented
/// expansion, normalized to unit norm. Internally the cores are rescaled by
/// sqrt(c_l) per mode so that the oracle normalization cancels.
BlockCircuit build_vapp(const Mps& mps, std::span<const OrthoBasis1D> bases);

/// Brickwork of m_bl-qubit blocks displaced one qubit at a time, Haar-random
/// from the seed; d*m_deg - m_bl + 1 gates.
BlockCircuit build_sliding_circuit(int d, int m_deg, int m_bl, std::uint64_t seed);

/// Free-parameter count 2^m_bl + 2^{2 m_bl - 1} (d m_deg - m_bl).
std::int64_t sliding_dof(int d, int m_deg, int m_bl);

/// Per-mode sqrt(c_l) gauge between coefficient space and grid space.
/// to_grid_gauge rescales cores by sqrt(c_l), restores canonical form and
/// normalizes; from_grid_gauge divides by sqrt(c_l) and restores canonical
/// form without normalizing.
Mps to_grid_gauge(const Mps& mps, std::span<const OrthoBasis1D> bases);
Mps from_grid_gauge(const Mps& mps, std::span<const OrthoBasis1D> bases);

/// Flattens a tensor whose extents are all powers of two into a statevector
/// (row-major order matches the register convention above).
StateVector to_statevector(const GridTensor& tensor);

/// -1 when v is not a positive power of two, else log2(v).
int log2_exact(std::int64_t v);

} // namespace ampex
