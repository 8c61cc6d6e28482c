#include "conslaw/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <future>
#include <numeric>
#include <string>
#include <thread>

#include "conslaw/error.hpp"

namespace conslaw {

namespace {

template <class Fn>
void for_each_in_box(const Index3& lo, const Index3& hi, Fn&& fn) {
  for (int k = lo[2]; k < hi[2]; ++k)
    for (int j = lo[1]; j < hi[1]; ++j)
      for (int i = lo[0]; i < hi[0]; ++i) fn(Index3{i, j, k});
}

/// Transverse ranges used during the pass for `axis`.
void pass_ranges(const GridSpec& g, int axis, Index3& lo, Index3& hi) {
  for (int b = 0; b < kMaxDim; ++b) {
    if (b < axis) {
      lo[b] = -g.ghosts(b);
      hi[b] = g.cells[b] + g.ghosts(b);
    } else {
      lo[b] = 0;
      hi[b] = g.cells[b];
    }
  }
}

std::vector<double> pack(const Field& f, const Index3& lo, const Index3& hi) {
  std::vector<double> out;
  for (int c = 0; c < f.ncomp(); ++c)
    for_each_in_box(lo, hi, [&](const Index3& i) { out.push_back(f.at(c, i)); });
  return out;
}

void unpack(Field& f, const Index3& lo, const Index3& hi, const std::vector<double>& payload) {
  std::size_t expected = static_cast<std::size_t>(f.ncomp());
  for (int b = 0; b < kMaxDim; ++b) expected *= static_cast<std::size_t>(hi[b] - lo[b]);
  if (payload.size() != expected)
    throw ProtocolError("halo payload has " + std::to_string(payload.size()) +
                        " values, expected " + std::to_string(expected));
  std::size_t n = 0;
  for (int c = 0; c < f.ncomp(); ++c)
    for_each_in_box(lo, hi, [&](const Index3& i) { f.at(c, i) = payload[n++]; });
}

}  // namespace

RankTopology RankTopology::make(int dim, Index3 ranks_per_axis, const BoundarySpec& bc) {
  RankTopology t;
  t.dim = dim;
  for (int a = 0; a < kMaxDim; ++a) {
    t.ranks_per_axis[a] = ranks_per_axis[a];
    t.periodic[a] = bc[a] == BoundaryKind::Periodic;
  }
  t.validate();
  return t;
}

void RankTopology::validate() const {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("topology dimension must be 1, 2 or 3");
  for (int a = 0; a < kMaxDim; ++a) {
    if (ranks_per_axis[a] < 1) throw ConfigError("ranks per axis must be >= 1");
    if (a >= dim && ranks_per_axis[a] != 1)
      throw ConfigError("ranks requested along axis " + std::to_string(a) +
                        " of a " + std::to_string(dim) + "D grid");
  }
}

Index3 RankTopology::coords(int rank) const {
  if (rank < 0 || rank >= size()) throw ConfigError("rank out of range");
  return {rank % ranks_per_axis[0], (rank / ranks_per_axis[0]) % ranks_per_axis[1],
          rank / (ranks_per_axis[0] * ranks_per_axis[1])};
}

int RankTopology::rank_of(const Index3& c) const {
  return c[0] + ranks_per_axis[0] * (c[1] + ranks_per_axis[1] * c[2]);
}

std::optional<int> RankTopology::neighbor(int rank, int axis, int side) const {
  if (axis >= dim) return std::nullopt;
  Index3 c = coords(rank);
  c[axis] += side == 0 ? -1 : 1;
  if (c[axis] < 0 || c[axis] >= ranks_per_axis[axis]) {
    if (!periodic[axis]) return std::nullopt;
    c[axis] = (c[axis] + ranks_per_axis[axis]) % ranks_per_axis[axis];
  }
  return rank_of(c);
}

std::vector<GridSpec> decompose(const GridSpec& global, const RankTopology& topo) {
  global.validate();
  topo.validate();
  if (topo.dim != global.dim) throw ConfigError("topology and grid dimensions differ");
  Index3 local_cells{};
  for (int a = 0; a < kMaxDim; ++a) {
    if (global.cells[a] % topo.ranks_per_axis[a] != 0)
      throw ConfigError("axis " + std::to_string(a) + ": " + std::to_string(global.cells[a]) +
                        " cells do not divide over " + std::to_string(topo.ranks_per_axis[a]) +
                        " ranks");
    local_cells[a] = global.cells[a] / topo.ranks_per_axis[a];
    if (topo.ranks_per_axis[a] > 1 && local_cells[a] < global.ghost_width)
      throw ConfigError("axis " + std::to_string(a) + ": local blocks are thinner than the ghost width");
  }
  std::vector<GridSpec> blocks;
  for (int r = 0; r < topo.size(); ++r) {
    const Index3 c = topo.coords(r);
    GridSpec b = global;
    for (int a = 0; a < kMaxDim; ++a) {
      b.cells[a] = local_cells[a];
      b.offset[a] = global.offset[a] + c[a] * local_cells[a];
    }
    blocks.push_back(b);
  }
  return blocks;
}

Field extract_block(const Field& global, const GridSpec& block) {
  Field local(block, global.ncomp(), 0.0);
  for (int c = 0; c < global.ncomp(); ++c)
    for_each_interior(block, [&](const Index3& i) {
      const Index3 gi{i[0] + block.offset[0] - global.grid().offset[0],
                      i[1] + block.offset[1] - global.grid().offset[1],
                      i[2] + block.offset[2] - global.grid().offset[2]};
      local.at(c, i) = global.at(c, gi);
    });
  return local;
}

void insert_block(Field& global, const Field& local) {
  const GridSpec& block = local.grid();
  for (int c = 0; c < local.ncomp(); ++c)
    for_each_interior(block, [&](const Index3& i) {
      const Index3 gi{i[0] + block.offset[0] - global.grid().offset[0],
                      i[1] + block.offset[1] - global.grid().offset[1],
                      i[2] + block.offset[2] - global.grid().offset[2]};
      global.at(c, gi) = local.at(c, i);
    });
}

InProcessTransport::InProcessTransport(int world_size) : world_size_(world_size) {
  if (world_size < 1) throw ConfigError("world size must be >= 1");
}

void InProcessTransport::send(HaloMessage msg) {
  if (msg.source < 0 || msg.source >= world_size_ || msg.dest < 0 || msg.dest >= world_size_)
    throw ProtocolError("message addressed outside the world");
  {
    std::lock_guard lock(mutex_);
    if (aborted_) throw ProtocolError("transport aborted: " + reason_);
    const auto pair = std::make_pair(msg.source, msg.dest);
    auto it = last_tag_.find(pair);
    if (it != last_tag_.end() && msg.tag <= it->second)
      throw ProtocolError("tag " + std::to_string(msg.tag) + " from rank " +
                          std::to_string(msg.source) + " to rank " + std::to_string(msg.dest) +
                          " does not increase");
    last_tag_[pair] = msg.tag;
    const Channel ch{msg.dest, msg.source, msg.kind, msg.axis, msg.side};
    queues_[ch].push_back(std::move(msg));
    ++sent_;
  }
  ready_.notify_all();
}

HaloMessage InProcessTransport::receive(int dest, int source, MessageKind kind, int axis,
                                        int side, std::uint64_t tag) {
  std::unique_lock lock(mutex_);
  const Channel ch{dest, source, kind, axis, side};
  ready_.wait(lock, [&] {
    if (aborted_) return true;
    auto it = queues_.find(ch);
    return it != queues_.end() && !it->second.empty();
  });
  if (aborted_) throw ProtocolError("transport aborted: " + reason_);
  auto& q = queues_[ch];
  HaloMessage msg = std::move(q.front());
  q.pop_front();
  if (msg.tag != tag) {
    const std::string what = "rank " + std::to_string(dest) + " expected tag " +
                             std::to_string(tag) + " from rank " + std::to_string(source) +
                             ", got " + std::to_string(msg.tag);
    aborted_ = true;
    reason_ = what;
    lock.unlock();
    ready_.notify_all();
    throw ProtocolError(what);
  }
  return msg;
}

void InProcessTransport::abort(const std::string& reason) {
  {
    std::lock_guard lock(mutex_);
    if (!aborted_) {
      aborted_ = true;
      reason_ = reason;
    }
  }
  ready_.notify_all();
}

std::size_t InProcessTransport::messages_sent() const {
  std::lock_guard lock(mutex_);
  return sent_;
}

std::size_t InProcessTransport::pending() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& [ch, q] : queues_) n += q.size();
  return n;
}

void exchange_halos(Field& field, const RankTopology& topo, int rank, Transport& transport,
                    std::uint64_t step_tag, const BoundarySpec& bc) {
  const GridSpec& g = field.grid();
  const int gw = g.ghost_width;
  for (int axis = 0; axis < g.dim; ++axis) {
    const int n = g.cells[axis];
    Index3 lo{}, hi{};
    pass_ranges(g, axis, lo, hi);

    for (int side = 0; side < 2; ++side) {
      const auto nb = topo.neighbor(rank, axis, side);
      if (!nb) continue;
      if (n < gw)
        throw ConfigError("block narrower than the ghost width on axis " + std::to_string(axis));
      Index3 slo = lo, shi = hi;
      slo[axis] = side == 0 ? 0 : n - gw;
      shi[axis] = side == 0 ? gw : n;
      transport.send({rank, *nb, MessageKind::Halo, axis, side,
                      message_tag(step_tag, 2 * axis + side), pack(field, slo, shi)});
    }

    for (int side = 0; side < 2; ++side) {
      Index3 glo = lo, ghi = hi;
      glo[axis] = side == 0 ? -gw : n;
      ghi[axis] = side == 0 ? 0 : n + gw;
      const auto nb = topo.neighbor(rank, axis, side);
      if (nb) {
        // my low ghosts come from the high face of the low neighbour
        const int their_side = 1 - side;
        const HaloMessage msg = transport.receive(rank, *nb, MessageKind::Halo, axis, their_side,
                                                  message_tag(step_tag, 2 * axis + their_side));
        unpack(field, glo, ghi, msg.payload);
        continue;
      }
      if (bc[axis] == BoundaryKind::Periodic)
        throw ProtocolError("periodic axis without a neighbour");
      const int src = side == 0 ? 0 : n - 1;
      for (int c = 0; c < field.ncomp(); ++c)
        for_each_in_box(glo, ghi, [&](const Index3& i) {
          Index3 s = i;
          s[axis] = src;
          field.at(c, i) = field.at(c, s);
        });
    }
  }
}

Point3 allreduce_max(RankContext& ctx, const Point3& local) {
  const std::uint64_t tag = message_tag(ctx.epoch++, 6);
  const int world = ctx.topo.size();
  for (int r = 0; r < world; ++r)
    if (r != ctx.rank)
      ctx.transport->send({ctx.rank, r, MessageKind::Reduce, 0, 0, tag,
                           std::vector<double>(local.begin(), local.end())});
  Point3 out{};
  for (int r = 0; r < world; ++r) {
    Point3 v = local;
    if (r != ctx.rank) {
      const HaloMessage msg = ctx.transport->receive(ctx.rank, r, MessageKind::Reduce, 0, 0, tag);
      if (msg.payload.size() != v.size()) throw ProtocolError("reduce payload size mismatch");
      std::copy(msg.payload.begin(), msg.payload.end(), v.begin());
    }
    for (int a = 0; a < kMaxDim; ++a) out[a] = r == 0 ? v[a] : std::max(out[a], v[a]);
  }
  return out;
}

std::optional<Field> gather_field(RankContext& ctx, const Field& local, const GridSpec& global) {
  const std::uint64_t tag = message_tag(ctx.epoch++, 7);
  if (ctx.rank != 0) {
    ctx.transport->send({ctx.rank, 0, MessageKind::Gather, 0, 0, tag, local.interior_values()});
    return std::nullopt;
  }
  Field out(global, local.ncomp(), 0.0);
  const auto blocks = decompose(global, ctx.topo);
  insert_block(out, local);
  for (int r = 1; r < ctx.topo.size(); ++r) {
    const HaloMessage msg = ctx.transport->receive(0, r, MessageKind::Gather, 0, 0, tag);
    Field piece(blocks[static_cast<std::size_t>(r)], local.ncomp(), 0.0);
    piece.set_interior_values(msg.payload);
    insert_block(out, piece);
  }
  return out;
}

CellBox inner_box(const GridSpec& grid, int radius) {
  CellBox box = CellBox::interior(grid);
  for (int a = 0; a < grid.dim; ++a) {
    box.lo[a] = radius;
    box.hi[a] = std::max(radius, grid.cells[a] - radius);
  }
  return box;
}

std::vector<CellBox> shell_boxes(const GridSpec& grid, int radius) {
  const CellBox inner = inner_box(grid, radius);
  if (inner.empty()) return {CellBox::interior(grid)};
  // Peel slabs axis by axis: axis a takes its two end slabs over the inner
  // range of axes < a and the full range of axes > a.
  std::vector<CellBox> out;
  for (int a = 0; a < grid.dim; ++a) {
    CellBox base = CellBox::interior(grid);
    for (int b = 0; b < a; ++b) {
      base.lo[b] = inner.lo[b];
      base.hi[b] = inner.hi[b];
    }
    CellBox low = base, high = base;
    low.hi[a] = inner.lo[a];
    high.lo[a] = inner.hi[a];
    if (!low.empty()) out.push_back(low);
    if (!high.empty()) out.push_back(high);
  }
  return out;
}

void overlapped_step(Field& field, double dt, const SchemeConfig& cfg, RankContext& ctx,
                     bool overlap) {
  const int radius = cfg.recon.radius();
  const CellBox inner = inner_box(field.grid(), radius);
  const std::vector<CellBox> shell = shell_boxes(field.grid(), radius);

  ssp_rk_step(field, dt, cfg.rk_order, [&](Field& stage, Field& rate) {
    const std::uint64_t tag = ctx.epoch++;
    if (!overlap) {
      exchange_halos(stage, ctx.topo, ctx.rank, *ctx.transport, tag, ctx.bc);
      spatial_residual_box(stage, cfg, CellBox::interior(stage.grid()), rate);
      return;
    }
    // The exchange writes ghosts only; the inner region reads interior only.
    auto exchange = std::async(std::launch::async, [&] {
      exchange_halos(stage, ctx.topo, ctx.rank, *ctx.transport, tag, ctx.bc);
    });
    try {
      spatial_residual_box(stage, cfg, inner, rate);
    } catch (...) {
      exchange.wait();
      throw;
    }
    exchange.get();
    for (const CellBox& box : shell) spatial_residual_box(stage, cfg, box, rate);
  });
}

RunResult run_decomposed(const Field& init, const SchemeConfig& cfg, const RankTopology& topo,
                         const ParallelOptions& options) {
  cfg.validate(init.grid());
  if (init.ncomp() != cfg.model.ncomp())
    throw ConfigError("field component count does not match the equation");
  for (int a = 0; a < init.grid().dim; ++a)
    if (topo.periodic[a] != (cfg.bc[a] == BoundaryKind::Periodic))
      throw ConfigError("topology periodicity differs from the boundary conditions");
  check_state(init, cfg.model, 0);

  const std::vector<GridSpec> blocks = decompose(init.grid(), topo);
  const int world = topo.size();
  InProcessTransport transport(world);
  std::vector<Field> locals;
  for (const GridSpec& b : blocks) locals.push_back(extract_block(init, b));

  RunResult result{init, 0.0, {}};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(world));
  std::vector<double> final_t(static_cast<std::size_t>(world), 0.0);

  auto rank_main = [&](int rank) {
    RankContext ctx{rank, topo, &transport, cfg.bc, 0};
    Field& u = locals[static_cast<std::size_t>(rank)];
    SnapshotScheduler scheduler(options.observers);
    auto fire = [&](double t) {
      const auto due = scheduler.due(t);
      if (due.empty()) return;
      const auto global = gather_field(ctx, u, init.grid());
      if (!global) return;
      for (const auto& [r, idx] : due)
        if (options.observers[r].callback) options.observers[r].callback(*global, t, idx);
    };
    fire(0.0);

    double t = 0.0;
    std::size_t step = 0;
    while (t < cfg.t_end && (!options.max_steps || step < *options.max_steps)) {
      const auto start = std::chrono::steady_clock::now();
      const Point3 speeds = allreduce_max(ctx, max_speeds(u, cfg.model));
      const double dt = std::min(cfl_dt(speeds, u.grid(), cfg.cfl), cfg.t_end - t);
      overlapped_step(u, dt, cfg, ctx, options.overlap);
      const auto stop = std::chrono::steady_clock::now();

      t = dt >= cfg.t_end - t ? cfg.t_end : t + dt;
      ++step;
      try {
        check_state(u, cfg.model, step);
      } catch (const NumericalError& e) {
        throw NumericalError("rank " + std::to_string(rank) + ": " + e.what());
      }
      if (rank == 0)
        result.records.push_back({step, t, dt, std::chrono::duration<double>(stop - start).count()});
      fire(t);
    }
    final_t[static_cast<std::size_t>(rank)] = t;
  };

  {
    std::vector<std::jthread> threads;
    for (int r = 0; r < world; ++r)
      threads.emplace_back([&, r] {
        try {
          rank_main(r);
        } catch (...) {
          errors[static_cast<std::size_t>(r)] = std::current_exception();
          transport.abort("rank " + std::to_string(r) + " failed");
        }
      });
  }

  // Prefer the root cause over the aborts it triggered elsewhere.
  std::exception_ptr first;
  for (const auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const ProtocolError&) {
      if (!first) first = e;
    } catch (...) {
      std::rethrow_exception(e);
    }
  }
  if (first) std::rethrow_exception(first);

  for (const Field& local : locals) insert_block(result.field, local);
  fill_boundary(result.field, cfg.bc);
  result.t = final_t[0];
  return result;
}

OverheadReport overhead_metric(int ranks, std::span<const double> times_k,
                               std::span<const double> times_1) {
  if (times_k.empty() || times_1.empty())
    throw ConfigError("overhead metric needs non-empty timing series");
  const double mean_k =
      std::accumulate(times_k.begin(), times_k.end(), 0.0) / static_cast<double>(times_k.size());
  const double mean_1 =
      std::accumulate(times_1.begin(), times_1.end(), 0.0) / static_cast<double>(times_1.size());
  if (!(mean_1 > 0.0)) throw ConfigError("baseline runtime must be positive");
  return {ranks, mean_k, mean_1, (mean_k - mean_1) / mean_1};
}

}  // namespace conslaw
