#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace rsma {

// Gray-mapped square QAM, orders 4/16/64/256, unit average symbol energy
// (E{|s|^2} = 1, matching the unit-power stream contract the precoders
// assume). Bit convention, documented once and pinned by tests:
//   - each symbol consumes log2(order) bits; the first half indexes the
//     in-phase axis, the second half the quadrature axis (MSB first);
//   - each axis is Gray-coded PAM with the all-zero bit group on the most
//     positive level, so 4-QAM "00" maps to (+1+j)/sqrt(2).

// Returns log2(order); throws std::invalid_argument unless order is one of
// 4, 16, 64, 256.
int qam_bits_per_symbol(int order);

// bits.size() must be a multiple of log2(order).
std::vector<std::complex<double>> qam_map(std::span<const std::uint8_t> bits, int order);

// Max-log LLRs for equalized symbols y = s + w, where w aggregates receiver
// noise and residual interference with total variance
// noise_var + interference_var (complex, split evenly across axes; the
// Gaussian-interference treatment is the standard demapper approximation).
// Output order matches qam_map's bit order; positive LLR <=> bit 0 more
// likely. Requires noise_var + interference_var > 0.
std::vector<double> qam_demap(std::span<const std::complex<double>> symbols, int order,
                              double noise_var, double interference_var);

}  // namespace rsma
