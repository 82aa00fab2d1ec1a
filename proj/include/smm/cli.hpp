#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace smm {

// Exit-code contract shared by every command: 0 success, 1 runtime failure,
// 2 usage/config error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct TrainOptions {
  std::string config_path;  // empty: built-in defaults
  std::string out_dir;      // overrides config when set
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

struct SweepOptions {
  std::string spec_path;  // empty: built-in defaults
  std::string out_dir;
  bool quiet = false;
};

int cmd_train(const TrainOptions& options);
int cmd_sweep(const SweepOptions& options);
int cmd_plot(const std::string& dir, const std::string& figure, bool quiet);
int cmd_probe(const std::string& checkpoint_path, const std::string& problem_text);
int cmd_gradcheck(std::uint64_t seed, long long trials);
int cmd_export_embeddings(const std::string& checkpoint_path, const std::string& out_path);

}  // namespace smm
