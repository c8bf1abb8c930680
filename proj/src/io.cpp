#include "maps/io.hpp"

#include "maps/error.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace maps {
namespace {

constexpr std::array<char, 8> kDemoMagic{'M', 'A', 'P', 'S', 'D', 'E', 'M', 'O'};
constexpr std::array<char, 8> kCkptMagic{'M', 'A', 'P', 'S', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kMaxDim = 1u << 24;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const char* p, std::size_t n) {
    out_.write(p, static_cast<std::streamsize>(n));
    require(static_cast<bool>(out_), ErrorKind::io, "write failed");
  }
  void u32(std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    bytes(b, 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void size(Eigen::Index n) {
    require(n >= 0 && static_cast<std::uint64_t>(n) < kMaxDim,
            ErrorKind::invalid_argument, "dimension too large to store");
    u32(static_cast<std::uint32_t>(n));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    require(in_.gcount() == static_cast<std::streamsize>(n), ErrorKind::format,
            "unexpected end of file");
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  int dim(const char* what) {
    const std::uint32_t v = u32();
    require(v < kMaxDim, ErrorKind::format, std::string("implausible ") + what);
    return static_cast<int>(v);
  }
  void expect_end() {
    require(in_.peek() == std::char_traits<char>::eof(), ErrorKind::format,
            "trailing bytes after payload");
  }

 private:
  std::istream& in_;
};

void write_magic(Writer& w, const std::array<char, 8>& magic) {
  w.bytes(magic.data(), magic.size());
}

void read_magic(Reader& r, const std::array<char, 8>& magic, const char* what) {
  std::array<char, 8> got{};
  r.bytes(got.data(), got.size());
  require(got == magic, ErrorKind::format, std::string("not a ") + what + " file");
}

void write_matrix(Writer& w, const Matrix& m) {
  w.size(m.rows());
  w.size(m.cols());
  for (Eigen::Index i = 0; i < m.size(); ++i) w.f64(m.data()[i]);
}

Matrix read_matrix(Reader& r) {
  const int rows = r.dim("matrix rows");
  const int cols = r.dim("matrix cols");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.f64();
  return m;
}

void write_net(Writer& w, const MlpParams& p) {
  w.size(static_cast<Eigen::Index>(p.layer_sizes.size()));
  for (int s : p.layer_sizes) w.size(s);
  w.u32(p.activate_output ? 1u : 0u);
  for (int l = 0; l < p.num_layers(); ++l) {
    write_matrix(w, p.weights[static_cast<std::size_t>(l)]);
    const Vector& b = p.biases[static_cast<std::size_t>(l)];
    w.size(b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) w.f64(b[i]);
  }
}

MlpParams read_net(Reader& r) {
  MlpParams p;
  const int n = r.dim("layer count");
  require(n >= 2, ErrorKind::format, "network needs at least two layer sizes");
  for (int i = 0; i < n; ++i) {
    p.layer_sizes.push_back(r.dim("layer size"));
    require(p.layer_sizes.back() >= 1, ErrorKind::format, "empty layer");
  }
  const std::uint32_t act = r.u32();
  require(act <= 1, ErrorKind::format, "bad activation flag");
  p.activate_output = act == 1;
  for (int l = 0; l + 1 < n; ++l) {
    Matrix wgt = read_matrix(r);
    require(wgt.rows() == p.layer_sizes[static_cast<std::size_t>(l + 1)] &&
                wgt.cols() == p.layer_sizes[static_cast<std::size_t>(l)],
            ErrorKind::format, "weight shape disagrees with layer sizes");
    const int bn = r.dim("bias size");
    require(bn == wgt.rows(), ErrorKind::format, "bias shape disagrees");
    Vector b(bn);
    for (int i = 0; i < bn; ++i) b[i] = r.f64();
    p.weights.push_back(std::move(wgt));
    p.biases.push_back(std::move(b));
  }
  return p;
}

void write_header(Writer& w, Method kind, const TrainConfig& config) {
  write_magic(w, kCkptMagic);
  w.u32(kCheckpointFormatVersion);
  w.u32(static_cast<std::uint32_t>(kind));
  const std::string text = to_config_text(config);
  w.size(static_cast<Eigen::Index>(text.size()));
  w.bytes(text.data(), text.size());
}

void write_arch(Writer& w, const MapsArchitecture& a) {
  for (int v : {a.state_dim, a.action_dim, a.num_tasks, a.num_modules,
                a.feature_dim, a.hidden_width, a.module_hidden_layers,
                a.selector_hidden_layers})
    w.size(v);
}

MapsArchitecture read_arch(Reader& r) {
  MapsArchitecture a;
  for (int* v : {&a.state_dim, &a.action_dim, &a.num_tasks, &a.num_modules,
                 &a.feature_dim, &a.hidden_width, &a.module_hidden_layers,
                 &a.selector_hidden_layers})
    *v = r.dim("architecture field");
  try {
    a.validate();
  } catch (const Error& e) {
    fail(ErrorKind::format, std::string("checkpoint architecture: ") + e.what());
  }
  return a;
}

bool same_shape(const MlpParams& a, const MlpParams& b) {
  return a.layer_sizes == b.layer_sizes && a.activate_output == b.activate_output;
}

// One decoded file. Single-agent files carry a subset of task policies.
struct Piece {
  Method kind;
  std::string config_text;
  AnyModel model;
  std::vector<int> single_tasks;
};

Piece read_piece(std::istream& in) {
  Reader r(in);
  read_magic(r, kCkptMagic, "checkpoint");
  const std::uint32_t version = r.u32();
  require(version == kCheckpointFormatVersion, ErrorKind::format,
          "unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t kind = r.u32();
  require(kind <= static_cast<std::uint32_t>(Method::mtmh), ErrorKind::format,
          "unknown model kind tag " + std::to_string(kind));
  Piece piece{static_cast<Method>(kind), {}, {}, {}};
  piece.config_text.resize(static_cast<std::size_t>(r.dim("config length")));
  r.bytes(piece.config_text.data(), piece.config_text.size());

  switch (piece.kind) {
    case Method::maps: {
      MapsModel m;
      m.arch = read_arch(r);
      const MapsModel shape = make_maps_model(m.arch, 0);
      for (int i = 0; i < m.arch.num_modules; ++i) m.modules.push_back(read_net(r));
      m.selector = read_net(r);
      m.head = read_net(r);
      bool ok = same_shape(m.selector, shape.selector) && same_shape(m.head, shape.head);
      for (int i = 0; i < m.arch.num_modules; ++i)
        ok = ok && same_shape(m.modules[static_cast<std::size_t>(i)],
                              shape.modules[static_cast<std::size_t>(i)]);
      require(ok, ErrorKind::format, "network shapes disagree with architecture");
      piece.model = std::move(m);
      break;
    }
    case Method::single: {
      SingleBcAgents a;
      a.num_tasks = r.dim("task count");
      const int count = r.dim("policy count");
      require(a.num_tasks >= 1 && count >= 1 && count <= a.num_tasks,
              ErrorKind::format, "bad single-agent policy count");
      a.nets.resize(static_cast<std::size_t>(a.num_tasks));
      for (int i = 0; i < count; ++i) {
        const int task = r.dim("task index");
        require(task < a.num_tasks, ErrorKind::format, "task index out of range");
        for (int t : piece.single_tasks)
          require(t != task, ErrorKind::format, "task stored twice");
        piece.single_tasks.push_back(task);
        a.nets[static_cast<std::size_t>(task)] = read_net(r);
      }
      piece.model = std::move(a);
      break;
    }
    case Method::mt: {
      MtBcModel m;
      m.num_tasks = r.dim("task count");
      m.net = read_net(r);
      require(m.num_tasks >= 1 && m.net.input_size() > m.num_tasks,
              ErrorKind::format, "bad multi-task input size");
      piece.model = std::move(m);
      break;
    }
    case Method::mtmh: {
      MtmhBcModel m;
      m.num_tasks = r.dim("task count");
      require(m.num_tasks >= 1, ErrorKind::format, "bad task count");
      m.trunk = read_net(r);
      for (int k = 0; k < m.num_tasks; ++k) {
        m.heads.push_back(read_net(r));
        require(m.heads.back().input_size() == m.trunk.output_size() &&
                    same_shape(m.heads.back(), m.heads.front()),
                ErrorKind::format, "head shapes disagree");
      }
      piece.model = std::move(m);
      break;
    }
  }
  r.expect_end();
  return piece;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::io, "cannot open " + path.string() +
                                                     " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
  return in;
}

}  // namespace

void write_demos(std::ostream& out, const DemoDataset& data) {
  data.validate();
  Writer w(out);
  write_magic(w, kDemoMagic);
  w.u32(kDemoFormatVersion);
  w.size(data.state_dim);
  w.size(data.action_dim);
  w.size(data.num_tasks);
  w.size(static_cast<Eigen::Index>(data.trajectories.size()));
  for (const Trajectory& t : data.trajectories) {
    w.size(t.task);
    w.size(t.length());
    for (Eigen::Index s = 0; s < t.length(); ++s) {
      for (Eigen::Index i = 0; i < t.states.rows(); ++i) w.f64(t.states(i, s));
      for (Eigen::Index i = 0; i < t.actions.rows(); ++i) w.f64(t.actions(i, s));
    }
  }
}

DemoDataset read_demos(std::istream& in) {
  Reader r(in);
  read_magic(r, kDemoMagic, "demonstration");
  const std::uint32_t version = r.u32();
  require(version == kDemoFormatVersion, ErrorKind::format,
          "unsupported demo version " + std::to_string(version));
  DemoDataset d;
  d.state_dim = r.dim("state dim");
  d.action_dim = r.dim("action dim");
  d.num_tasks = r.dim("task count");
  const int count = r.dim("trajectory count");
  d.trajectories.reserve(static_cast<std::size_t>(count));
  for (int n = 0; n < count; ++n) {
    Trajectory t;
    t.task = r.dim("task index");
    const int len = r.dim("trajectory length");
    t.states.resize(d.state_dim, len);
    t.actions.resize(d.action_dim, len);
    for (int s = 0; s < len; ++s) {
      for (int i = 0; i < d.state_dim; ++i) t.states(i, s) = r.f64();
      for (int i = 0; i < d.action_dim; ++i) t.actions(i, s) = r.f64();
    }
    d.trajectories.push_back(std::move(t));
  }
  r.expect_end();
  try {
    d.validate();
  } catch (const Error& e) {
    fail(ErrorKind::format, std::string("demo file: ") + e.what());
  }
  return d;
}

void save_demos(const std::filesystem::path& path, const DemoDataset& data) {
  auto out = open_out(path);
  write_demos(out, data);
}

DemoDataset load_demos(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_demos(in);
}

void write_checkpoint(std::ostream& out, const TrainConfig& config,
                      const AnyModel& model) {
  Writer w(out);
  write_header(w, method_of(model), config);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MapsModel>) {
          write_arch(w, m.arch);
          for (const MlpParams& net : m.modules) write_net(w, net);
          write_net(w, m.selector);
          write_net(w, m.head);
        } else if constexpr (std::is_same_v<T, SingleBcAgents>) {
          w.size(m.num_tasks);
          w.size(m.num_tasks);
          for (int k = 0; k < m.num_tasks; ++k) {
            w.size(k);
            write_net(w, m.nets[static_cast<std::size_t>(k)]);
          }
        } else if constexpr (std::is_same_v<T, MtBcModel>) {
          w.size(m.num_tasks);
          write_net(w, m.net);
        } else {
          w.size(m.num_tasks);
          write_net(w, m.trunk);
          for (const MlpParams& h : m.heads) write_net(w, h);
        }
      },
      model);
}

void write_single_task_checkpoint(std::ostream& out, const TrainConfig& config,
                                  const SingleBcAgents& agents, int task) {
  require(task >= 0 && task < agents.num_tasks, ErrorKind::invalid_argument,
          "task index out of range");
  Writer w(out);
  write_header(w, Method::single, config);
  w.size(agents.num_tasks);
  w.size(1);
  w.size(task);
  write_net(w, agents.nets[static_cast<std::size_t>(task)]);
}

Checkpoint read_checkpoint(std::istream& in) {
  Piece p = read_piece(in);
  if (p.kind == Method::single)
    require(static_cast<int>(p.single_tasks.size()) ==
                std::get<SingleBcAgents>(p.model).num_tasks,
            ErrorKind::format, "single-agent checkpoint lacks some tasks");
  return Checkpoint{parse_config(p.config_text), std::move(p.model)};
}

void save_checkpoint(const std::filesystem::path& path, const TrainConfig& config,
                     const AnyModel& model) {
  auto out = open_out(path);
  write_checkpoint(out, config, model);
}

void save_single_task_checkpoint(const std::filesystem::path& path,
                                 const TrainConfig& config,
                                 const SingleBcAgents& agents, int task) {
  auto out = open_out(path);
  write_single_task_checkpoint(out, config, agents, task);
}

Checkpoint load_checkpoint(std::span<const std::filesystem::path> paths) {
  require(!paths.empty(), ErrorKind::invalid_argument, "no checkpoint given");
  std::vector<Piece> pieces;
  for (const auto& path : paths) {
    auto in = open_in(path);
    pieces.push_back(read_piece(in));
  }
  const Piece& first = pieces.front();
  for (const Piece& p : pieces) {
    require(p.kind == first.kind, ErrorKind::format, "checkpoint kinds differ");
    require(p.config_text == first.config_text, ErrorKind::format,
            "checkpoint configs differ");
  }
  if (first.kind != Method::single) {
    require(pieces.size() == 1, ErrorKind::invalid_argument,
            "only single-agent checkpoints can be combined");
    return Checkpoint{parse_config(first.config_text), first.model};
  }

  SingleBcAgents merged;
  merged.num_tasks = std::get<SingleBcAgents>(first.model).num_tasks;
  merged.nets.resize(static_cast<std::size_t>(merged.num_tasks));
  std::vector<char> seen(static_cast<std::size_t>(merged.num_tasks), 0);
  for (const Piece& p : pieces) {
    const auto& a = std::get<SingleBcAgents>(p.model);
    require(a.num_tasks == merged.num_tasks, ErrorKind::format,
            "single-agent checkpoints disagree on the task count");
    for (int t : p.single_tasks) {
      auto& s = seen[static_cast<std::size_t>(t)];
      require(!s, ErrorKind::format, "task " + std::to_string(t) + " given twice");
      s = 1;
      merged.nets[static_cast<std::size_t>(t)] = a.nets[static_cast<std::size_t>(t)];
    }
  }
  for (int t = 0; t < merged.num_tasks; ++t)
    require(seen[static_cast<std::size_t>(t)], ErrorKind::format,
            "no policy for task " + std::to_string(t));
  return Checkpoint{parse_config(first.config_text), std::move(merged)};
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return load_checkpoint(std::span<const std::filesystem::path>(&path, 1));
}

Checkpoint load_checkpoint(std::span<const std::filesystem::path> paths,
                           Method expected_kind, const TrainConfig& expected_config) {
  Checkpoint c = load_checkpoint(paths);
  require(method_of(c.model) == expected_kind, ErrorKind::format,
          "checkpoint holds a " + std::string(to_string(method_of(c.model))) +
              " model, expected " + std::string(to_string(expected_kind)));
  require(c.config == expected_config, ErrorKind::format,
          "checkpoint config does not match the given config");
  return c;
}

}  // namespace maps
