// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <string>

#include "sgrec/config.hpp"
#include "sgrec/decoder.hpp"
#include "sgrec/encoder.hpp"

namespace sgrec {

/// Model + optimizer state in one versioned file.
///
/// Layout: an ASCII magic/version line, a JSON metadata block (config echo,
/// epoch counters, best validation metric, seed), then named tensor sections:
///   TENSOR <name> <ndim> <dims...>\n  followed by ndims-product raw
///   little-endian float64 values.
/// Masked item-network tensors are stored as values over the support; the
/// support itself is persisted once as the integer section `item.mask` of
/// shape (nnz, 2) in coordinate-list form. Optimizer moments reuse the tensor
/// names under `adam.m.` / `adam.v.` prefixes. Loads reject version or shape
/// mismatches and truncated files, naming the offending section.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  RunConfig config;
  int epoch = 0;        // epochs completed
  int adam_step = 0;    // optimizer steps taken
  double best_metric = -1.0;  // best validation NDCG@k_cut seen so far
  std::uint64_t seed = 0;

  DecoderParams dec;
  EncoderParams enc;
  DecoderParams adam_m_dec, adam_v_dec;
  EncoderParams adam_m_enc, adam_v_enc;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

  /// Binds the checkpoint to a dataset: throws LoadError naming `gamma` when
  /// the stored shapes do not match (orders, items).
  void ensure_matches(int orders, int items) const;
};

}  // namespace sgrec
