#pragma once

#include <span>

#include "fiberae/signal.hpp"

// Unitary (1/sqrt(N) both ways) complex DFT of arbitrary length, backed by FFTW.
// Plans are cached per (length, direction, placement); execution is thread-safe.
namespace fiberae::dft {

CVec forward(std::span<const cplx> x);
CVec inverse(std::span<const cplx> x);
void forward_inplace(std::span<cplx> x);
void inverse_inplace(std::span<cplx> x);

}  // namespace fiberae::dft
