#include "nlsa/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nlsa {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

void KvDoc::add(const std::string& key, const std::string& value) {
    entries.emplace_back(key, value);
}

bool KvDoc::has(const std::string& key) const {
    for (const auto& [k, v] : entries) {
        if (k == key) return true;
    }
    return false;
}

const std::string& KvDoc::get(const std::string& key) const {
    for (const auto& [k, v] : entries) {
        if (k == key) return v;
    }
    throw std::invalid_argument("missing key: " + key);
}

std::string KvDoc::get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
}

KvDoc parse_kv(const std::string& text) {
    KvDoc doc;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(stripped.substr(0, eq));
        if (doc.has(key)) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        doc.add(key, trim(stripped.substr(eq + 1)));
    }
    return doc;
}

std::string serialize_kv(const KvDoc& doc) {
    std::string out;
    for (const auto& [k, v] : doc.entries) {
        out += k;
        out += " = ";
        out += v;
        out += "\n";
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string format_double(double v) {
    char buf[64];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::string format_fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

double parse_double(const std::string& text) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0') throw std::invalid_argument("bad number: " + text);
    return v;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

namespace {

std::string int16_list(const Int16Vector& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(v[i]);
    }
    return out;
}

Int16Vector parse_int16_list(const std::string& text, int expected) {
    Int16Vector v(expected);
    std::istringstream in(text);
    long value = 0;
    int count = 0;
    while (in >> value) {
        if (count >= expected) throw std::invalid_argument("table: too many parameter values");
        if (value < kInt16Min || value > kInt16Max) {
            throw std::invalid_argument("table: parameter out of int16 range");
        }
        v[count++] = static_cast<std::int16_t>(value);
    }
    if (count != expected) throw std::invalid_argument("table: wrong parameter count");
    return v;
}

int parse_int(const std::string& text) {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument("bad integer: " + text);
    return v;
}

}  // namespace

std::string serialize_table(const SegmentTable& table) {
    KvDoc doc;
    doc.add("format_version", "1");
    doc.add("function", nonlinearity_name(table.function));
    doc.add("granularity", format_double(table.granularity));
    doc.add("x_min", format_double(table.x_min));
    doc.add("x_max", format_double(table.x_max));
    doc.add("num_segments", std::to_string(table.num_segments));
    doc.add("format_k", table.format_k.name());
    doc.add("format_b", table.format_b.name());
    if (table.shift_exponent) doc.add("shift_exponent", std::to_string(*table.shift_exponent));
    doc.add("k_values", int16_list(table.k_values));
    doc.add("b_values", int16_list(table.b_values));
    return serialize_kv(doc);
}

SegmentTable deserialize_table(const std::string& text) {
    const KvDoc doc = parse_kv(text);
    if (doc.get("format_version") != "1") throw std::invalid_argument("table: unknown format_version");
    SegmentTable t;
    t.function = parse_nonlinearity(doc.get("function"));
    t.granularity = parse_double(doc.get("granularity"));
    t.x_min = parse_double(doc.get("x_min"));
    t.x_max = parse_double(doc.get("x_max"));
    t.num_segments = parse_int(doc.get("num_segments"));
    if (t.num_segments <= 0) throw std::invalid_argument("table: num_segments must be positive");
    t.format_k = parse_format(doc.get("format_k"));
    t.format_b = parse_format(doc.get("format_b"));
    if (doc.has("shift_exponent")) {
        t.shift_exponent = parse_int(doc.get("shift_exponent"));
    }
    // Stored and derived shift exponents must agree with the granularity.
    const auto derived = power_of_two_exponent(t.granularity);
    if (derived != t.shift_exponent) throw std::invalid_argument("table: shift_exponent mismatch");
    t.k_values = parse_int16_list(doc.get("k_values"), t.num_segments);
    t.b_values = parse_int16_list(doc.get("b_values"), t.num_segments);
    return t;
}

void write_table_file(const std::filesystem::path& path, const SegmentTable& table) {
    write_text_file(path, serialize_table(table));
}

SegmentTable read_table_file(const std::filesystem::path& path) {
    return deserialize_table(read_text_file(path));
}

std::string serialize_config(const SystolicConfig& cfg) {
    KvDoc doc;
    doc.add("pe_rows", std::to_string(cfg.pe_rows));
    doc.add("pe_cols", std::to_string(cfg.pe_cols));
    doc.add("macs_per_pe", std::to_string(cfg.macs_per_pe));
    doc.add("l1_buffer_bytes", std::to_string(cfg.l1_buffer_bytes));
    doc.add("pe_buffer_bytes", std::to_string(cfg.pe_buffer_bytes));
    doc.add("l2_buffer_bytes", std::to_string(cfg.l2_buffer_bytes));
    doc.add("l2_banks", std::to_string(cfg.l2_banks));
    doc.add("l3_buffer_bytes", std::to_string(cfg.l3_buffer_bytes));
    doc.add("l3_instances", std::to_string(cfg.l3_instances));
    doc.add("output_bus_width", std::to_string(cfg.output_bus_width));
    doc.add("ipf_ports", std::to_string(cfg.ipf_ports));
    doc.add("ipf_pipeline_depth", std::to_string(cfg.ipf_pipeline_depth));
    doc.add("dram_latency_cycles", std::to_string(cfg.dram_latency_cycles));
    doc.add("clock_mhz", format_double(cfg.clock_mhz));
    return serialize_kv(doc);
}

SystolicConfig deserialize_config(const std::string& text) {
    static const std::set<std::string> known = {
        "pe_rows",          "pe_cols",        "macs_per_pe",    "l1_buffer_bytes",
        "pe_buffer_bytes",  "l2_buffer_bytes","l2_banks",       "l3_buffer_bytes",
        "l3_instances",     "output_bus_width","ipf_ports",     "ipf_pipeline_depth",
        "dram_latency_cycles", "clock_mhz"};
    const KvDoc doc = parse_kv(text);
    SystolicConfig cfg;
    for (const auto& [key, value] : doc.entries) {
        if (!known.count(key)) throw std::invalid_argument("config: unknown key '" + key + "'");
        if (key == "pe_rows") cfg.pe_rows = parse_int(value);
        else if (key == "pe_cols") cfg.pe_cols = parse_int(value);
        else if (key == "macs_per_pe") cfg.macs_per_pe = parse_int(value);
        else if (key == "l1_buffer_bytes") cfg.l1_buffer_bytes = parse_int(value);
        else if (key == "pe_buffer_bytes") cfg.pe_buffer_bytes = parse_int(value);
        else if (key == "l2_buffer_bytes") cfg.l2_buffer_bytes = parse_int(value);
        else if (key == "l2_banks") cfg.l2_banks = parse_int(value);
        else if (key == "l3_buffer_bytes") cfg.l3_buffer_bytes = parse_int(value);
        else if (key == "l3_instances") cfg.l3_instances = parse_int(value);
        else if (key == "output_bus_width") cfg.output_bus_width = parse_int(value);
        else if (key == "ipf_ports") cfg.ipf_ports = parse_int(value);
        else if (key == "ipf_pipeline_depth") cfg.ipf_pipeline_depth = parse_int(value);
        else if (key == "dram_latency_cycles") cfg.dram_latency_cycles = parse_int(value);
        else if (key == "clock_mhz") cfg.clock_mhz = parse_double(value);
    }
    cfg.validate();
    return cfg;
}

SystolicConfig read_config_file(const std::filesystem::path& path) {
    return deserialize_config(read_text_file(path));
}

void write_config_file(const std::filesystem::path& path, const SystolicConfig& cfg) {
    write_text_file(path, serialize_config(cfg));
}

std::string config_hash(const SystolicConfig& cfg) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(serialize_config(cfg))));
    return buf;
}

void write_weights_file(const std::filesystem::path& path, const QuantizedMatrix& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const auto v = static_cast<std::uint16_t>(m.values(i, j));
            const char bytes[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
            out.write(bytes, 2);
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

QuantizedMatrix read_weights_file(const std::filesystem::path& path, Eigen::Index rows,
                                  Eigen::Index cols, FixedPointFormat fmt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    QuantizedMatrix m{Int16Matrix(rows, cols), fmt};
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            char bytes[2];
            if (!in.read(bytes, 2)) throw std::runtime_error("weights file truncated: " + path.string());
            const auto lo = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[0]));
            const auto hi = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[1]));
            m.values(i, j) = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
        }
    }
    char extra;
    if (in.read(&extra, 1)) throw std::runtime_error("weights file has trailing bytes: " + path.string());
    return m;
}

namespace {

void add_cap_bounds(KvDoc& doc, const NetworkSpec& net) {
    for (const auto& [fn, bounds] : net.cap_bounds) {
        const std::string prefix = "cap." + nonlinearity_name(fn);
        doc.add(prefix + ".x_min", format_double(bounds.x_min));
        doc.add(prefix + ".x_max", format_double(bounds.x_max));
    }
}

std::string weight_file_name(const std::string& net_name, std::size_t layer, const char* what) {
    return net_name + ".layer" + std::to_string(layer) + "." + what + ".bin";
}

}  // namespace

void write_network(const std::filesystem::path& manifest_path, const NetworkSpec& net) {
    const std::filesystem::path dir = manifest_path.parent_path();
    KvDoc doc;
    doc.add("format_version", "1");
    doc.add("name", net.name);
    doc.add("input_channels", std::to_string(net.input_shape.channels));
    doc.add("input_height", std::to_string(net.input_shape.height));
    doc.add("input_width", std::to_string(net.input_shape.width));
    doc.add("granularity", format_double(net.granularity));
    doc.add("activation_format", net.activation_format.name());
    add_cap_bounds(doc, net);
    doc.add("layers", std::to_string(net.layers.size()));
    for (std::size_t idx = 0; idx < net.layers.size(); ++idx) {
        const LayerSpec& layer = net.layers[idx];
        const std::string p = "layer." + std::to_string(idx) + ".";
        doc.add(p + "kind", layer_kind_name(layer.kind));
        switch (layer.kind) {
            case LayerKind::kDense:
                doc.add(p + "in_features", std::to_string(layer.in_features));
                doc.add(p + "out_features", std::to_string(layer.out_features));
                break;
            case LayerKind::kConv2d:
                doc.add(p + "in_channels", std::to_string(layer.conv.in_channels));
                doc.add(p + "in_height", std::to_string(layer.conv.in_height));
                doc.add(p + "in_width", std::to_string(layer.conv.in_width));
                doc.add(p + "kernel_h", std::to_string(layer.conv.kernel_h));
                doc.add(p + "kernel_w", std::to_string(layer.conv.kernel_w));
                doc.add(p + "stride", std::to_string(layer.conv.stride));
                doc.add(p + "padding", std::to_string(layer.conv.padding));
                doc.add(p + "out_channels", std::to_string(layer.out_channels));
                break;
            case LayerKind::kLayernorm:
                doc.add(p + "axis_len", std::to_string(layer.norm_axis_len));
                break;
            default:
                break;
        }
        if (layer.weight.size() > 0) {
            const std::string file = weight_file_name(net.name, idx, "weight");
            doc.add(p + "weight.file", file);
            doc.add(p + "weight.rows", std::to_string(layer.weight.rows()));
            doc.add(p + "weight.cols", std::to_string(layer.weight.cols()));
            doc.add(p + "weight.format", layer.weight.format.name());
            write_weights_file(dir / file, layer.weight);
        }
        if (layer.bias.size() > 0) {
            const std::string file = weight_file_name(net.name, idx, "bias");
            doc.add(p + "bias.file", file);
            doc.add(p + "bias.rows", std::to_string(layer.bias.rows()));
            doc.add(p + "bias.cols", std::to_string(layer.bias.cols()));
            doc.add(p + "bias.format", layer.bias.format.name());
            write_weights_file(dir / file, layer.bias);
        }
    }
    write_text_file(manifest_path, serialize_kv(doc));
}

NetworkSpec read_network(const std::filesystem::path& manifest_path) {
    const std::filesystem::path dir = manifest_path.parent_path();
    const KvDoc doc = parse_kv(read_text_file(manifest_path));
    if (doc.get("format_version") != "1") throw std::invalid_argument("manifest: unknown format_version");
    NetworkSpec net;
    net.name = doc.get("name");
    net.input_shape.channels = parse_int(doc.get("input_channels"));
    net.input_shape.height = parse_int(doc.get("input_height"));
    net.input_shape.width = parse_int(doc.get("input_width"));
    net.granularity = parse_double(doc.get("granularity"));
    net.activation_format = parse_format(doc.get("activation_format"));
    for (const auto& fn : {Nonlinearity::kGelu, Nonlinearity::kExp, Nonlinearity::kReciprocal,
                           Nonlinearity::kRsqrt, Nonlinearity::kTanh, Nonlinearity::kSigmoid,
                           Nonlinearity::kRelu}) {
        const std::string prefix = "cap." + nonlinearity_name(fn);
        if (doc.has(prefix + ".x_min")) {
            net.cap_bounds[fn] = {parse_double(doc.get(prefix + ".x_min")),
                                  parse_double(doc.get(prefix + ".x_max"))};
        }
    }
    const int layer_count = parse_int(doc.get("layers"));
    for (int idx = 0; idx < layer_count; ++idx) {
        const std::string p = "layer." + std::to_string(idx) + ".";
        LayerSpec layer;
        layer.kind = parse_layer_kind(doc.get(p + "kind"));
        switch (layer.kind) {
            case LayerKind::kDense:
                layer.in_features = parse_int(doc.get(p + "in_features"));
                layer.out_features = parse_int(doc.get(p + "out_features"));
                break;
            case LayerKind::kConv2d:
                layer.conv.in_channels = parse_int(doc.get(p + "in_channels"));
                layer.conv.in_height = parse_int(doc.get(p + "in_height"));
                layer.conv.in_width = parse_int(doc.get(p + "in_width"));
                layer.conv.kernel_h = parse_int(doc.get(p + "kernel_h"));
                layer.conv.kernel_w = parse_int(doc.get(p + "kernel_w"));
                layer.conv.stride = parse_int(doc.get(p + "stride"));
                layer.conv.padding = parse_int(doc.get(p + "padding"));
                layer.out_channels = parse_int(doc.get(p + "out_channels"));
                break;
            case LayerKind::kLayernorm:
                layer.norm_axis_len = parse_int(doc.get(p + "axis_len"));
                break;
            default:
                break;
        }
        if (doc.has(p + "weight.file")) {
            layer.weight = read_weights_file(dir / doc.get(p + "weight.file"),
                                             parse_int(doc.get(p + "weight.rows")),
                                             parse_int(doc.get(p + "weight.cols")),
                                             parse_format(doc.get(p + "weight.format")));
        }
        if (doc.has(p + "bias.file")) {
            layer.bias = read_weights_file(dir / doc.get(p + "bias.file"),
                                           parse_int(doc.get(p + "bias.rows")),
                                           parse_int(doc.get(p + "bias.cols")),
                                           parse_format(doc.get(p + "bias.format")));
        }
        net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
}

void write_eval_set(const std::filesystem::path& path, const EvalSet& set) {
    std::string out;
    out += "# eval-set v1\n";
    out += std::to_string(set.features.rows()) + " " + std::to_string(set.features.cols()) + " " +
           std::to_string(set.classes) + "\n";
    for (Eigen::Index i = 0; i < set.features.rows(); ++i) {
        out += std::to_string(set.labels[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < set.features.cols(); ++j) {
            out += ' ';
            out += format_double(set.features(i, j));
        }
        out += '\n';
    }
    write_text_file(path, out);
}

EvalSet read_eval_set(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line) || line.rfind("# eval-set", 0) != 0) {
        throw std::invalid_argument("eval set: missing header line");
    }
    Eigen::Index rows = 0, cols = 0;
    int classes = 0;
    in >> rows >> cols >> classes;
    if (rows <= 0 || cols <= 0 || classes <= 0) throw std::invalid_argument("eval set: bad dimensions");
    EvalSet set;
    set.classes = classes;
    set.features.resize(rows, cols);
    set.labels.resize(static_cast<std::size_t>(rows));
    for (Eigen::Index i = 0; i < rows; ++i) {
        int label = 0;
        if (!(in >> label) || label < 0 || label >= classes) {
            throw std::invalid_argument("eval set: bad label");
        }
        set.labels[static_cast<std::size_t>(i)] = label;
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (!(in >> set.features(i, j))) throw std::invalid_argument("eval set: truncated row");
        }
    }
    return set;
}

CsvWriter::CsvWriter(std::string meta, std::vector<std::string> header)
    : meta_(std::move(meta)), header_(std::move(header)) {}

void CsvWriter::add_row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw std::logic_error("csv: row width mismatch");
    rows_.push_back(std::move(cells));
}

std::string CsvWriter::str() const {
    std::string out = "# " + meta_ + "\n";
    auto join = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    join(header_);
    for (const auto& row : rows_) join(row);
    return out;
}

void CsvWriter::write(const std::filesystem::path& path) const {
    write_text_file(path, str());
}

}  // namespace nlsa
