#include "cvgp/bundle.hpp"

#include <sstream>

#include "textio.hpp"

namespace cvgp {

namespace {

constexpr const char* kMagic = "cvgp-bundle";

void put_matrix(std::ostringstream& out, const std::string& name, const Matrix& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << textio::fmt(m(i, j));
    }
    out << '\n';
  }
}

void put_vector(std::ostringstream& out, const std::string& name, const Vector& v) {
  put_matrix(out, name, v.transpose());
}

Vector to_vector(const std::vector<Index>& v) {
  Vector out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Index>(i)) = static_cast<double>(v[i]);
  return out;
}

void put_net(std::ostringstream& out, const std::string& prefix, const LikelihoodNet& net) {
  put_vector(out, prefix + ".arch", [&] {
    Vector a(2 + static_cast<Index>(net.arch.hidden_widths.size()));
    a(0) = static_cast<double>(net.arch.input_dim);
    a(1) = static_cast<double>(net.arch.output_dim);
    a.tail(a.size() - 2) = to_vector(net.arch.hidden_widths);
    return a;
  }());
  put_vector(out, prefix + ".params", net.params);
  put_vector(out, prefix + ".scaler_offset", net.scaler.offset);
  put_vector(out, prefix + ".scaler_scale", net.scaler.scale);
}

class Reader {
 public:
  explicit Reader(const std::string& text) : in_(text) {}

  std::vector<std::string> tokens(const std::string& what) {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      auto toks = textio::split_ws(line);
      if (toks.empty()) continue;
      return {toks.begin(), toks.end()};
    }
    throw FormatError("bundle: unexpected end of file while reading " + what);
  }

  std::string header(const std::string& key) {
    auto t = tokens(key);
    if (t.size() != 2 || t[0] != key) throw FormatError(where() + "expected '" + key + " <value>'");
    return t[1];
  }

  Matrix matrix(const std::string& name) {
    auto t = tokens(name);
    if (t.size() != 3 || t[0] != name) throw FormatError(where() + "expected matrix '" + name + "'");
    const auto rows = textio::parse_int(t[1], where() + name + " rows");
    const auto cols = textio::parse_int(t[2], where() + name + " cols");
    if (rows < 0 || cols < 0) throw FormatError(where() + "negative matrix size for '" + name + "'");
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      auto row = rows > 0 && cols == 0 ? std::vector<std::string>{} : tokens(name);
      if (static_cast<Index>(row.size()) != cols) {
        throw FormatError(where() + "matrix '" + name + "' row " + std::to_string(i) + " has " +
                          std::to_string(row.size()) + " entries, expected " + std::to_string(cols));
      }
      for (Index j = 0; j < cols; ++j) m(i, j) = textio::parse_finite(row[static_cast<std::size_t>(j)], where() + name);
    }
    return m;
  }

  Vector vector(const std::string& name) {
    Matrix m = matrix(name);
    if (m.rows() != 1) throw FormatError(where() + "'" + name + "' must be a single row");
    return m.row(0).transpose();
  }

  std::string where() const { return "bundle line " + std::to_string(lineno_) + ": "; }

 private:
  std::istringstream in_;
  int lineno_ = 0;
};

Index as_index(double v, const std::string& what) {
  const auto i = static_cast<Index>(v);
  if (static_cast<double>(i) != v || i < 0) throw FormatError("bundle: " + what + " must be a nonnegative integer");
  return i;
}

LikelihoodNet read_net(Reader& r, const std::string& prefix) {
  LikelihoodNet net;
  Vector a = r.vector(prefix + ".arch");
  if (a.size() < 2) throw FormatError("bundle: " + prefix + ".arch too short");
  net.arch.input_dim = as_index(a(0), prefix + " input width");
  net.arch.output_dim = as_index(a(1), prefix + " output width");
  for (Index i = 2; i < a.size(); ++i) net.arch.hidden_widths.push_back(as_index(a(i), prefix + " hidden width"));
  net.arch.validate();
  net.params = r.vector(prefix + ".params");
  net.scaler.offset = r.vector(prefix + ".scaler_offset");
  net.scaler.scale = r.vector(prefix + ".scaler_scale");
  require_dims(net.params.size() == net.arch.shape().n_params(), "bundle: " + prefix + " parameter count mismatch");
  require_dims(net.scaler.size() == net.arch.input_dim, "bundle: " + prefix + " scaler width mismatch");
  return net;
}

}  // namespace

void ModelBundle::validate() const {
  grid.validate();
  const Index M = grid.size();
  const Index m = grid.dim();
  const Index k = pod.k;
  require_dims(pod.n_points() == M && pod.basis.rows() == M && pod.basis.cols() == k,
               "bundle: POD basis does not match the grid size");
  require_dims(recog.k() == k, "bundle: recognition rank " + std::to_string(recog.k()) + " differs from POD rank " +
                                   std::to_string(k));
  const Index d = recog.param_dim();
  require_dims(net.arch.input_dim == k + m + d && net.n_heads() == 1,
               "bundle: likelihood network input width differs from k + m + d");
  require_dims(net.scaler.size() == net.arch.input_dim, "bundle: scaler width mismatch");
  if (discrete) {
    require_dims(discrete->arch.input_dim == k + d && discrete->n_heads() == M,
                 "bundle: discrete network shape differs from (k + d) -> 2M");
  }
}

std::string serialize_bundle(const ModelBundle& b) {
  b.validate();
  std::ostringstream out;
  out << kMagic << " 1\n";
  out << "version " << b.provenance.version << '\n';
  out << "config_hash " << (b.provenance.config_hash.empty() ? "-" : b.provenance.config_hash) << '\n';
  out << "seed " << b.provenance.seed << '\n';
  out << "noise " << textio::fmt(b.provenance.noise) << '\n';
  out << "discrete " << (b.discrete ? 1 : 0) << '\n';

  put_matrix(out, "grid", b.grid.points);
  put_vector(out, "grid.lo", b.grid.box_lo);
  put_vector(out, "grid.hi", b.grid.box_hi);

  put_vector(out, "pod.mean", b.pod.mean_row);
  put_matrix(out, "pod.basis", b.pod.basis);
  put_vector(out, "pod.eigenvalues", b.pod.eigenvalues);

  const Index k = b.recog.k();
  const Index d = b.recog.param_dim();
  put_vector(out, "recog.latent_mean", b.recog.latent_mean);
  put_vector(out, "recog.latent_scale", b.recog.latent_scale);
  put_matrix(out, "recog.inputs", b.recog.models.front().train_inputs);
  Matrix targets(b.recog.models.front().n_train(), k);
  // per coordinate: signal sigma, lengthscales, noise sigma, noise floor
  Matrix hyper(k, d + 3);
  for (Index j = 0; j < k; ++j) {
    const GprModel& g = b.recog.models[static_cast<std::size_t>(j)];
    require_dims(g.train_inputs == b.recog.models.front().train_inputs, "bundle: recognition models disagree on inputs");
    targets.col(j) = g.train_targets;
    hyper(j, 0) = g.kernel.signal_sigma;
    hyper.block(j, 1, 1, d) = g.kernel.lengthscales.transpose();
    hyper(j, d + 1) = g.noise_sigma;
    hyper(j, d + 2) = g.noise_floor;
  }
  put_matrix(out, "recog.targets", targets);
  put_matrix(out, "recog.hyper", hyper);

  put_net(out, "net", b.net);
  if (b.discrete) put_net(out, "discrete", *b.discrete);
  out << "end\n";
  return out.str();
}

ModelBundle parse_bundle(const std::string& text) {
  Reader r(text);
  auto magic = r.tokens("magic");
  if (magic.size() != 2 || magic[0] != kMagic || magic[1] != "1") throw FormatError("bundle: not a cvgp bundle (bad magic line)");
  ModelBundle b;
  b.provenance.version = r.header("version");
  b.provenance.config_hash = r.header("config_hash");
  if (b.provenance.config_hash == "-") b.provenance.config_hash.clear();
  const auto seed = textio::parse_int(r.header("seed"), "bundle seed");
  b.provenance.seed = static_cast<std::uint64_t>(seed);
  b.provenance.noise = textio::parse_finite(r.header("noise"), "bundle noise");
  const std::string has_discrete = r.header("discrete");
  if (has_discrete != "0" && has_discrete != "1") throw FormatError("bundle: 'discrete' must be 0 or 1");

  b.grid.points = r.matrix("grid");
  b.grid.box_lo = r.vector("grid.lo");
  b.grid.box_hi = r.vector("grid.hi");

  b.pod.mean_row = r.vector("pod.mean");
  b.pod.basis = r.matrix("pod.basis");
  b.pod.eigenvalues = r.vector("pod.eigenvalues");
  b.pod.k = b.pod.basis.cols();

  b.recog.latent_mean = r.vector("recog.latent_mean");
  b.recog.latent_scale = r.vector("recog.latent_scale");
  const Matrix inputs = r.matrix("recog.inputs");
  const Matrix targets = r.matrix("recog.targets");
  const Matrix hyper = r.matrix("recog.hyper");
  const Index k = hyper.rows();
  const Index d = inputs.cols();
  require_dims(hyper.cols() == d + 3 && targets.cols() == k && targets.rows() == inputs.rows() &&
                   b.recog.latent_mean.size() == k && b.recog.latent_scale.size() == k,
               "bundle: recognition blocks have inconsistent sizes");
  for (Index j = 0; j < k; ++j) {
    ArdSeKernel kern{hyper(j, 0), hyper.block(j, 1, 1, d).transpose()};
    b.recog.models.push_back(GprModel::condition(kern, hyper(j, d + 1), inputs, targets.col(j), hyper(j, d + 2)));
  }

  b.net = read_net(r, "net");
  if (has_discrete == "1") b.discrete = read_net(r, "discrete");
  auto end = r.tokens("end");
  if (end.size() != 1 || end[0] != "end") throw FormatError(r.where() + "expected 'end'");
  b.validate();
  return b;
}

void save_bundle(const ModelBundle& b, const std::filesystem::path& path) {
  const std::string text = serialize_bundle(b);
  auto out = textio::open_out(path.string());
  out << text;
  if (!out) throw RuntimeFailure("failed writing bundle '" + path.string() + "'");
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  auto in = textio::open_in(path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_bundle(ss.str());
}

}  // namespace cvgp
