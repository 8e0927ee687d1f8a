#include <latsep/io.hpp>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace latsep {

namespace {

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string& name = names[i];
    if (name.empty() || name.find(',') != std::string::npos ||
        name.find('\n') != std::string::npos)
      throw std::runtime_error("attribute name '" + name + "' is empty or contains ',' or newline");
    if (i) out += ',';
    out += name;
  }
  return out;
}

std::vector<std::string> split_names(const std::string& joined, int expected) {
  std::vector<std::string> names;
  std::stringstream ss(joined);
  std::string item;
  while (std::getline(ss, item, ',')) names.push_back(item);
  if (static_cast<int>(names.size()) != expected)
    throw std::runtime_error("manifest declares " + std::to_string(expected) +
                             " attributes but names " + std::to_string(names.size()));
  return names;
}

class ManifestReader {
 public:
  ManifestReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  std::string line(const std::string& key) {
    std::string text;
    if (!std::getline(in_, text))
      throw std::runtime_error(what_ + ": manifest ended before '" + key + "'");
    if (key.empty()) return text;  // version line
    const std::string prefix = key + " ";
    if (text.rfind(prefix, 0) != 0)
      throw std::runtime_error(what_ + ": expected manifest key '" + key + "', got '" + text + "'");
    return text.substr(prefix.size());
  }

  long integer(const std::string& key) {
    const std::string v = line(key);
    try {
      std::size_t pos = 0;
      const long parsed = std::stol(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return parsed;
    } catch (const std::exception&) {
      throw std::runtime_error(what_ + ": manifest key '" + key + "' is not an integer: " + v);
    }
  }

  std::uint64_t unsigned64(const std::string& key) {
    const std::string v = line(key);
    try {
      std::size_t pos = 0;
      const unsigned long long parsed = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return parsed;
    } catch (const std::exception&) {
      throw std::runtime_error(what_ + ": manifest key '" + key + "' is not an integer: " + v);
    }
  }

  void separator() {
    const std::string text = line("");
    if (text != "---") throw std::runtime_error(what_ + ": missing '---' separator");
  }

 private:
  std::istream& in_;
  std::string what_;
};

std::string read_file(const std::string& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(what + ": cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void check_payload_size(std::size_t actual, std::size_t expected, const std::string& what) {
  if (actual < expected)
    throw std::runtime_error(what + " payload truncated: expected " + std::to_string(expected) +
                             " bytes, found " + std::to_string(actual));
  if (actual > expected)
    throw std::runtime_error(what + " payload has " + std::to_string(actual - expected) +
                             " trailing bytes beyond the declared " + std::to_string(expected));
}

std::size_t svm_value_count(int k_attrs, int dim) {
  return static_cast<std::size_t>(k_attrs) * static_cast<std::size_t>(dim + 1);
}

void append_hyperplanes(std::vector<double>& values, const std::vector<SvmHyperplane>& set) {
  for (const SvmHyperplane& h : set) {
    for (Eigen::Index i = 0; i < h.weight.size(); ++i) values.push_back(h.weight(i));
    values.push_back(h.bias);
  }
}

std::vector<SvmHyperplane> take_hyperplanes(const double*& cursor, int k_attrs, int dim) {
  std::vector<SvmHyperplane> set(static_cast<std::size_t>(k_attrs));
  for (int k = 0; k < k_attrs; ++k) {
    SvmHyperplane& h = set[static_cast<std::size_t>(k)];
    h.weight.resize(dim);
    for (int i = 0; i < dim; ++i) h.weight(i) = *cursor++;
    h.bias = *cursor++;
    h.attribute = k;
  }
  return set;
}

}  // namespace

void atomic_write(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

void save_dataset(const LabeledLatentDataset& dataset, const std::string& path) {
  dataset.validate();
  const int n = dataset.num_samples();
  const int dim = dataset.dim();
  const int k_attrs = dataset.num_attributes();
  if (dataset.provenance != "synthetic" && dataset.provenance != "imported")
    throw std::runtime_error("dataset provenance must be 'synthetic' or 'imported'");

  std::ostringstream out;
  out << "LDS1\n"
      << "dim " << dim << "\n"
      << "attributes " << k_attrs << "\n"
      << "samples " << n << "\n"
      << "names " << join_names(dataset.attribute_names) << "\n"
      << "provenance " << dataset.provenance << "\n"
      << "seed " << dataset.seed << "\n"
      << "---\n";

  std::vector<float> codes(static_cast<std::size_t>(n) * static_cast<std::size_t>(dim));
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d)
      codes[static_cast<std::size_t>(i) * static_cast<std::size_t>(dim) +
            static_cast<std::size_t>(d)] = static_cast<float>(dataset.codes(i, d));

  std::string bytes = out.str();
  const std::size_t header = bytes.size();
  bytes.resize(header + codes.size() * sizeof(float) +
               static_cast<std::size_t>(n) * static_cast<std::size_t>(k_attrs));
  std::memcpy(bytes.data() + header, codes.data(), codes.size() * sizeof(float));
  std::memcpy(bytes.data() + header + codes.size() * sizeof(float), dataset.labels.data(),
              static_cast<std::size_t>(n) * static_cast<std::size_t>(k_attrs));
  atomic_write(path, bytes);
}

LabeledLatentDataset load_dataset(const std::string& path) {
  const std::string bytes = read_file(path, "dataset");
  std::istringstream in(bytes);
  ManifestReader manifest(in, "dataset");

  const std::string version = manifest.line("");
  if (version != "LDS1")
    throw std::runtime_error("dataset version mismatch: expected LDS1, got '" + version + "'");
  const long dim = manifest.integer("dim");
  const long k_attrs = manifest.integer("attributes");
  const long n = manifest.integer("samples");
  if (dim < 1 || k_attrs < 1 || n < 1)
    throw std::runtime_error("dataset manifest declares empty dimensions");
  const std::string names = manifest.line("names");
  const std::string provenance = manifest.line("provenance");
  if (provenance != "synthetic" && provenance != "imported")
    throw std::runtime_error("dataset provenance must be 'synthetic' or 'imported', got '" +
                             provenance + "'");
  const std::uint64_t seed = manifest.unsigned64("seed");
  manifest.separator();

  const auto offset = static_cast<std::size_t>(in.tellg());
  const std::size_t code_bytes = 4ul * static_cast<std::size_t>(n) * static_cast<std::size_t>(dim);
  const std::size_t label_bytes = static_cast<std::size_t>(n) * static_cast<std::size_t>(k_attrs);
  check_payload_size(bytes.size() - offset, code_bytes + label_bytes, "dataset");

  LabeledLatentDataset dataset;
  dataset.attribute_names = split_names(names, static_cast<int>(k_attrs));
  dataset.provenance = provenance;
  dataset.seed = seed;
  dataset.codes.resize(n, dim);
  std::vector<float> codes(static_cast<std::size_t>(n) * static_cast<std::size_t>(dim));
  std::memcpy(codes.data(), bytes.data() + offset, code_bytes);
  for (long i = 0; i < n; ++i)
    for (long d = 0; d < dim; ++d)
      dataset.codes(i, d) = static_cast<double>(
          codes[static_cast<std::size_t>(i) * static_cast<std::size_t>(dim) +
                static_cast<std::size_t>(d)]);
  dataset.labels.resize(n, k_attrs);
  std::memcpy(dataset.labels.data(), bytes.data() + offset + code_bytes, label_bytes);
  dataset.validate();
  return dataset;
}

void save_model(const ModelBundle& bundle, const std::string& path) {
  const FlowModel& flow = bundle.flow;
  const int dim = flow.dim();
  const int k_attrs = bundle.bank.size();
  if (k_attrs == 0) throw std::runtime_error("model: classifier bank is empty");
  if (bundle.bank.dim() != dim) throw std::runtime_error("model: bank/flow dimension mismatch");
  for (const auto* set : {&bundle.svm_original, &bundle.svm_proxy})
    if (!set->empty() && static_cast<int>(set->size()) != k_attrs)
      throw std::runtime_error("model: hyperplane set must be empty or one per attribute");

  std::vector<double> values;
  values.reserve(flow.parameter_count() + 3 * svm_value_count(k_attrs, dim));
  flow.visit_parameters([&values](const Mat& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) values.push_back(m(i, j));
  });
  for (const auto& c : bundle.bank.classifiers) {
    for (Eigen::Index i = 0; i < c.weight.size(); ++i) values.push_back(c.weight(i));
    values.push_back(c.bias);
  }
  append_hyperplanes(values, bundle.svm_original);
  append_hyperplanes(values, bundle.svm_proxy);

  std::ostringstream out;
  out << "NFM1\n"
      << "dim " << dim << "\n"
      << "layers " << flow.num_layers() << "\n"
      << "hidden " << flow.hidden() << "\n"
      << "parities ";
  for (int i = 0; i < flow.num_layers(); ++i)
    out << (i ? "," : "") << flow.layers()[static_cast<std::size_t>(i)].parity;
  out << "\n"
      << "attributes " << k_attrs << "\n"
      << "names " << join_names(bundle.bank.attribute_names) << "\n"
      << "svm_original " << (bundle.svm_original.empty() ? 0 : 1) << "\n"
      << "svm_proxy " << (bundle.svm_proxy.empty() ? 0 : 1) << "\n"
      << "seed " << bundle.seed << "\n"
      << "config " << (bundle.config_echo.empty() ? "-" : bundle.config_echo) << "\n"
      << "params " << values.size() << "\n"
      << "---\n";

  std::string bytes = out.str();
  const std::size_t header = bytes.size();
  bytes.resize(header + values.size() * sizeof(double));
  std::memcpy(bytes.data() + header, values.data(), values.size() * sizeof(double));
  atomic_write(path, bytes);
}

ModelBundle load_model(const std::string& path) {
  const std::string bytes = read_file(path, "model");
  std::istringstream in(bytes);
  ManifestReader manifest(in, "model");

  const std::string version = manifest.line("");
  if (version != "NFM1")
    throw std::runtime_error("model version mismatch: expected NFM1, got '" + version + "'");
  const int dim = static_cast<int>(manifest.integer("dim"));
  const int num_layers = static_cast<int>(manifest.integer("layers"));
  const int hidden = static_cast<int>(manifest.integer("hidden"));
  const std::string parities = manifest.line("parities");
  const int k_attrs = static_cast<int>(manifest.integer("attributes"));
  const std::string names = manifest.line("names");
  const long has_orig = manifest.integer("svm_original");
  const long has_proxy = manifest.integer("svm_proxy");
  const std::uint64_t seed = manifest.unsigned64("seed");
  const std::string config = manifest.line("config");
  const long declared = manifest.integer("params");
  manifest.separator();

  if (dim < 2 || dim % 2 != 0 || num_layers < 1 || hidden < 1 || k_attrs < 1)
    throw std::runtime_error("model manifest declares an invalid architecture");

  // rebuild the architecture with zero parameters, then fill in order
  const int half = dim / 2;
  std::vector<CouplingLayer> layers(static_cast<std::size_t>(num_layers));
  {
    std::stringstream ss(parities);
    std::string item;
    int i = 0;
    while (std::getline(ss, item, ',')) {
      if (i >= num_layers || (item != "0" && item != "1"))
        throw std::runtime_error("model manifest parities are malformed");
      layers[static_cast<std::size_t>(i)].parity = item == "1" ? 1 : 0;
      ++i;
    }
    if (i != num_layers) throw std::runtime_error("model manifest parities are malformed");
  }
  for (CouplingLayer& layer : layers) {
    for (SubNet* net : {&layer.scale_net, &layer.translation_net}) {
      net->l1.weight = Mat::Zero(half, hidden);
      net->l1.bias = Mat::Zero(1, hidden);
      net->l2.weight = Mat::Zero(hidden, hidden);
      net->l2.bias = Mat::Zero(1, hidden);
      net->l3.weight = Mat::Zero(hidden, half);
      net->l3.bias = Mat::Zero(1, half);
    }
    layer.scale_net.tanh_output = true;
  }

  ModelBundle bundle;
  bundle.flow = FlowModel(dim, hidden, std::move(layers));
  bundle.seed = seed;
  bundle.config_echo = config == "-" ? std::string() : config;

  const std::size_t flow_count = bundle.flow.parameter_count();
  const std::size_t expected = flow_count + svm_value_count(k_attrs, dim) * (1 + (has_orig ? 1u : 0u) + (has_proxy ? 1u : 0u));
  if (declared < 0 || static_cast<std::size_t>(declared) != expected)
    throw std::runtime_error("model manifest declares " + std::to_string(declared) +
                             " parameters but the architecture needs " + std::to_string(expected));

  const auto offset = static_cast<std::size_t>(in.tellg());
  check_payload_size(bytes.size() - offset, expected * sizeof(double), "model");

  std::vector<double> values(expected);
  std::memcpy(values.data(), bytes.data() + offset, expected * sizeof(double));
  const double* cursor = values.data();
  bundle.flow.visit_parameters([&cursor](Mat& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = *cursor++;
  });

  bundle.bank.attribute_names = split_names(names, k_attrs);
  bundle.bank.classifiers.resize(static_cast<std::size_t>(k_attrs));
  for (auto& c : bundle.bank.classifiers) {
    c.weight.resize(dim);
    for (int i = 0; i < dim; ++i) c.weight(i) = *cursor++;
    c.bias = *cursor++;
    c.frozen = true;
  }
  if (has_orig) bundle.svm_original = take_hyperplanes(cursor, k_attrs, dim);
  if (has_proxy) bundle.svm_proxy = take_hyperplanes(cursor, k_attrs, dim);
  return bundle;
}

}  // namespace latsep
