#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "conslaw/grid.hpp"
#include "conslaw/solver.hpp"

namespace conslaw {

/// Cartesian arrangement of ranks. Rank ids enumerate coordinates x fastest.
struct RankTopology {
  int dim = 1;
  Index3 ranks_per_axis{1, 1, 1};
  std::array<bool, kMaxDim> periodic{true, true, true};

  static RankTopology make(int dim, Index3 ranks_per_axis, const BoundarySpec& bc);
  void validate() const;

  int size() const { return ranks_per_axis[0] * ranks_per_axis[1] * ranks_per_axis[2]; }
  Index3 coords(int rank) const;
  int rank_of(const Index3& coords) const;
  /// Neighbouring rank across the low (side 0) or high (side 1) face of
  /// `axis`; empty at a non-periodic edge of the world.
  std::optional<int> neighbor(int rank, int axis, int side) const;
};

/// Local block of every rank, indexed by rank id. Throws ConfigError unless
/// each axis divides evenly.
std::vector<GridSpec> decompose(const GridSpec& global, const RankTopology& topo);

/// Copies the interior of `block` out of `global` (same global geometry).
Field extract_block(const Field& global, const GridSpec& block);
/// Writes the interior of `local` into the matching region of `global`.
void insert_block(Field& global, const Field& local);

enum class MessageKind { Halo, Reduce, Gather };

/// One message on the transport.
///
/// For halo messages `side` is the face of the SENDER the slab was taken
/// from, and `payload` holds ncomp * ghost_width * (transverse extents)
/// values: component-major, then x fastest over the slab box. During the
/// pass for axis a the slab spans the padded range on axes < a and the
/// interior range on axes > a.
struct HaloMessage {
  int source = 0;
  int dest = 0;
  MessageKind kind = MessageKind::Halo;
  int axis = 0;
  int side = 0;
  std::uint64_t tag = 0;
  std::vector<double> payload;
};

/// Point-to-point message transport between ranks. Messages between a pair
/// of ranks on the same (kind, axis, side) channel are delivered in order,
/// exactly once.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(HaloMessage msg) = 0;
  /// Blocks until the next message on the channel arrives; throws
  /// ProtocolError if its tag differs from `tag` or the transport aborted.
  virtual HaloMessage receive(int dest, int source, MessageKind kind, int axis, int side,
                              std::uint64_t tag) = 0;
  /// Wakes every blocked receiver with a ProtocolError.
  virtual void abort(const std::string& reason) = 0;
};

/// Queue-based transport for ranks living in one process.
class InProcessTransport final : public Transport {
 public:
  explicit InProcessTransport(int world_size);

  void send(HaloMessage msg) override;
  HaloMessage receive(int dest, int source, MessageKind kind, int axis, int side,
                      std::uint64_t tag) override;
  void abort(const std::string& reason) override;

  std::size_t messages_sent() const;
  std::size_t pending() const;

 private:
  using Channel = std::tuple<int, int, MessageKind, int, int>;

  int world_size_;
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::map<Channel, std::deque<HaloMessage>> queues_;
  std::map<std::pair<int, int>, std::uint64_t> last_tag_;
  std::size_t sent_ = 0;
  bool aborted_ = false;
  std::string reason_;
};

/// What one rank knows about the world. Collective operations advance
/// `epoch`; every rank runs the same sequence of collectives, so tags agree.
struct RankContext {
  int rank = 0;
  RankTopology topo;
  Transport* transport = nullptr;
  BoundarySpec bc{};
  std::uint64_t epoch = 0;
};

/// Message tag of a slot within a collective: 8 slots per epoch.
inline std::uint64_t message_tag(std::uint64_t epoch, int slot) {
  return epoch * 8 + static_cast<std::uint64_t>(slot);
}

/// Fills every ghost cell of `field` from neighbouring ranks (axis by axis,
/// x then y then z); faces on the edge of a non-periodic world use the
/// local boundary kind. `step_tag` selects the message tags.
void exchange_halos(Field& field, const RankTopology& topo, int rank, Transport& transport,
                    std::uint64_t step_tag, const BoundarySpec& bc);

/// Element-wise maximum over all ranks, combined in rank order.
Point3 allreduce_max(RankContext& ctx, const Point3& local);

/// Sends every local interior to rank 0, which returns the stitched global
/// field; other ranks return nothing.
std::optional<Field> gather_field(RankContext& ctx, const Field& local, const GridSpec& global);

/// Cells at distance >= radius from every face of the local block.
CellBox inner_box(const GridSpec& grid, int radius);
/// Disjoint boxes covering the interior minus inner_box.
std::vector<CellBox> shell_boxes(const GridSpec& grid, int radius);

/// One SSP-RK step of a rank's block. With `overlap` each stage starts the
/// halo exchange asynchronously, computes the inner residual, waits, then
/// computes the shell; without it the stage exchanges first and computes
/// the whole block. Both produce identical bits.
void overlapped_step(Field& field, double dt, const SchemeConfig& cfg, RankContext& ctx,
                     bool overlap = true);

struct ParallelOptions {
  std::optional<std::size_t> max_steps;
  bool overlap = true;
  std::vector<SnapshotRequest> observers;
};

/// Runs `init` decomposed over topo.size() in-process ranks, one thread
/// each. The global time step is the CFL step of the per-axis maximum
/// speeds reduced across ranks, so results match run_simulation bit for bit.
/// Records are those of rank 0.
RunResult run_decomposed(const Field& init, const SchemeConfig& cfg, const RankTopology& topo,
                         const ParallelOptions& options = {});

struct OverheadReport {
  int ranks = 1;
  double mean_seconds = 0.0;
  double baseline_mean_seconds = 0.0;
  double overhead_fraction = 0.0;
};

/// (mean(times_k) - mean(times_1)) / mean(times_1).
OverheadReport overhead_metric(int ranks, std::span<const double> times_k,
                               std::span<const double> times_1);

}  // namespace conslaw
