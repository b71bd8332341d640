#pragma once

#include <cstdint>
#include <filesystem>

#include "fakerair/model.hpp"

namespace fakerair {

// FKRM: little-endian checkpoint container.
//
//   magic "FKRM", u16 version (1), u64 config_hash, u32 tensor_count, then
//   per tensor: u32 name_len, name bytes, u32 ndim, u32 dims[ndim], f32
//   payload in row-major order.
//
// Tensors written for this model:
//   dims       [5]  = n_vars, n_out, t_in, kernel, hidden (stored as f32)
//   norm_mean  [n_vars]
//   norm_std   [n_vars]
//   hidden>0:  w1 [hidden][F], b1 [hidden], w2 [n_out][hidden], b2 [n_out]
//   hidden==0: w  [n_out][F],  b  [n_out]
void save_checkpoint(const std::filesystem::path& path, const Forecaster& model,
                     uint64_t config_hash);

// Loads a checkpoint; when expected_hash != 0 and the stored hash differs,
// throws DataError printing both hashes. Loaded parameters are exact f32
// values widened to double.
Forecaster load_checkpoint(const std::filesystem::path& path, uint64_t expected_hash);

}  // namespace fakerair
