#pragma once

#include <string>

#include "crlkit/cca.hpp"
#include "crlkit/corrnet.hpp"
#include "crlkit/deep.hpp"

namespace crlkit {

/// CRLKIT01 checkpoint container.
///
/// Layout: 8-byte magic "CRLKIT01", a little-endian u32 type id
/// (1 = corrnet, 2 = deep corrnet, 3 = cca), the type payload, and a
/// trailing CRC-32 (little-endian u32) over everything between the magic
/// and the CRC.
///
/// corrnet payload: u32 k, d1, d2, f_act id, g_act id, recon loss id,
/// then the six parameter blocks W, V, W', V', b, b' as little-endian f64
/// row-major arrays.
///
/// deep payload: u32 f_act, g_act, loss id, raw_d1, raw_d2, depth, then
/// depth u32 layer sizes, then x_stack and y_stack layer blocks (W then b
/// per layer), the top corrnet's six blocks, then x_dec and y_dec blocks.
///
/// cca payload: u32 d1, d2, k, then mean_x, mean_y, proj_x, proj_y,
/// correlations.
///
/// Readers reject bad magic, bad CRC, and unknown type ids.

inline constexpr char kCheckpointMagic[9] = "CRLKIT01";

enum class CheckpointType : std::uint32_t { CorrNet = 1, DeepCorrNet = 2, Cca = 3 };

void save_checkpoint(const std::string& path, const CorrNetParams& p);
void save_checkpoint(const std::string& path, const DeepCorrNet& net);
void save_checkpoint(const std::string& path, const CcaModel& model);

/// Type of the checkpoint at `path` (validates magic and CRC).
CheckpointType peek_checkpoint_type(const std::string& path);

CorrNetParams load_corrnet_checkpoint(const std::string& path);
DeepCorrNet load_deep_checkpoint(const std::string& path);
CcaModel load_cca_checkpoint(const std::string& path);

}  // namespace crlkit
