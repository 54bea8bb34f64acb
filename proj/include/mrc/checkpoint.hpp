#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include "mrc/model.hpp"
#include "mrc/optim.hpp"

namespace mrc {

// Layout: a text header
//
//   mrc-checkpoint 1
//   dtype f32|f64
//   step <n>
//   config <lines>      followed by that many key=value lines
//   tokens <n>          one token per line
//   chars <n>           one character per line
//   tensors <n>         "<name> <rows> <cols> <offset>" per line
//   adam <steps>        optional; moments appear as adam.m/<name>, adam.v/<name>
//   end
//
// then raw little-endian values of the header's dtype, addressed by element
// offset from the first byte after "end\n".
struct Checkpoint {
  std::unique_ptr<MrcModel> model;
  std::optional<Adam> optimizer;
  std::uint64_t step = 0;
};

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(std::ostream& out, const MrcModel& model, const Adam* optimizer,
                     std::uint64_t step);
void save_checkpoint(const std::string& path, const MrcModel& model, const Adam* optimizer,
                     std::uint64_t step);

// Throws DataError for malformed files and ConfigError when the stored
// tensors do not fit the stored config.
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mrc
