#pragma once

#include <complex>
#include <span>
#include <vector>

namespace rlnet {

using Complex = std::complex<double>;

/// In-place forward DFT with unitary scaling (1/sqrt(N)), so sum |x|^2 == sum |X|^2.
/// Backed by FFTW with cached estimate-mode plans.
void fft_unitary(std::span<Complex> data);

/// Symmetric Hann window of length n.
std::vector<double> hann_window(std::size_t n);

}  // namespace rlnet
