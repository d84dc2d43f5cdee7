#include "train/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace dcn::train {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void bad_line(int line_no, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line_no) + ": " + what);
}

TomlValue parse_value(const std::string& raw, int line_no) {
    TomlValue v;
    if (raw.empty()) bad_line(line_no, "missing value");
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"') bad_line(line_no, "unterminated string");
        v.kind = TomlValue::Kind::String;
        v.s = raw.substr(1, raw.size() - 2);
        return v;
    }
    if (raw == "true" || raw == "false") {
        v.kind = TomlValue::Kind::Boolean;
        v.b = raw == "true";
        return v;
    }
    const bool looks_float = raw.find_first_of(".eE") != std::string::npos &&
                             raw.find_first_not_of("+-0123456789.eE") == std::string::npos;
    if (!looks_float) {
        int64_t i = 0;
        const auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), i);
        if (ec == std::errc() && p == raw.data() + raw.size()) {
            v.kind = TomlValue::Kind::Integer;
            v.i = i;
            return v;
        }
    }
    try {
        size_t used = 0;
        const double f = std::stod(raw, &used);
        if (used != raw.size()) bad_line(line_no, "malformed number '" + raw + "'");
        v.kind = TomlValue::Kind::Float;
        v.f = f;
        return v;
    } catch (const std::exception&) {
        bad_line(line_no, "cannot parse value '" + raw + "'");
    }
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

} // namespace

std::string TomlValue::as_string() const {
    if (kind != Kind::String) throw ConfigError("expected a string value");
    return s;
}

int64_t TomlValue::as_int() const {
    if (kind != Kind::Integer) throw ConfigError("expected an integer value");
    return i;
}

double TomlValue::as_float() const {
    if (kind == Kind::Float) return f;
    if (kind == Kind::Integer) return static_cast<double>(i);
    throw ConfigError("expected a numeric value");
}

bool TomlValue::as_bool() const {
    if (kind != Kind::Boolean) throw ConfigError("expected a boolean value");
    return b;
}

TomlTable parse_toml(const std::string& text) {
    TomlTable table;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') bad_line(line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) bad_line(line_no, "empty section name");
            table[section];
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) bad_line(line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) bad_line(line_no, "empty key");
        table[section][key] = parse_value(trim(line.substr(eq + 1)), line_no);
    }
    return table;
}

TomlTable parse_toml_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_toml(buf.str());
}

namespace {

struct SectionReader {
    const std::map<std::string, TomlValue>* kv = nullptr;

    const TomlValue* get(const std::string& key) const {
        if (!kv) return nullptr;
        const auto it = kv->find(key);
        return it == kv->end() ? nullptr : &it->second;
    }
    void read(const std::string& key, int& out) const {
        if (const auto* v = get(key)) out = static_cast<int>(v->as_int());
    }
    void read(const std::string& key, int64_t& out) const {
        if (const auto* v = get(key)) out = v->as_int();
    }
    void read(const std::string& key, uint64_t& out) const {
        if (const auto* v = get(key)) out = static_cast<uint64_t>(v->as_int());
    }
    void read(const std::string& key, double& out) const {
        if (const auto* v = get(key)) out = v->as_float();
    }
    void read(const std::string& key, float& out) const {
        if (const auto* v = get(key)) out = static_cast<float>(v->as_float());
    }
    void read(const std::string& key, bool& out) const {
        if (const auto* v = get(key)) out = v->as_bool();
    }
    void read(const std::string& key, std::string& out) const {
        if (const auto* v = get(key)) out = v->as_string();
    }
};

SectionReader section(const TomlTable& t, const std::string& name) {
    const auto it = t.find(name);
    return {it == t.end() ? nullptr : &it->second};
}

} // namespace

TrainConfig TrainConfig::from_toml(const TomlTable& t) {
    TrainConfig cfg;

    const SectionReader model = section(t, "model");
    std::string mode = condition_mode_name(cfg.net.mode);
    model.read("mode", mode);
    const auto parsed_mode = nn::condition_mode_from_string(mode);
    if (!parsed_mode) throw ConfigError("unknown mode '" + mode + "' (use dcn or dcn0)");
    cfg.net.mode = *parsed_mode;
    model.read("image_size", cfg.net.image_size);
    model.read("base_channels", cfg.net.base_channels);
    model.read("n_resnet_blocks", cfg.net.n_resnet_blocks_total);
    model.read("encoder_blocks", cfg.net.encoder_blocks);
    model.read("disc_base_channels", cfg.net.disc_base_channels);
    model.read("bn_eps", cfg.net.bn_eps);
    model.read("bn_momentum", cfg.net.bn_momentum);
    model.read("init_stddev", cfg.net.init_stddev);

    const SectionReader lo = section(t, "loss");
    lo.read("lambda_l1", cfg.hp.lambda_l1);
    lo.read("lambda_idt", cfg.hp.lambda_idt);
    lo.read("lambda_r", cfg.hp.lambda_r);
    lo.read("lambda_d", cfg.hp.lambda_d);
    lo.read("lambda_s", cfg.hp.lambda_s);
    lo.read("lambda_cls", cfg.hp.lambda_cls);

    const SectionReader tr = section(t, "train");
    tr.read("base_lr", cfg.hp.base_lr);
    tr.read("total_iters", cfg.hp.total_iters);
    tr.read("batch_size", cfg.hp.batch_size);
    tr.read("seed", cfg.seed);
    tr.read("checkpoint_every", cfg.checkpoint_every);
    tr.read("pseudo_every", cfg.pseudo_every);
    tr.read("pseudo_full_decoder", cfg.pseudo_full_decoder);
    tr.read("log_csv", cfg.log_csv);

    const SectionReader da = section(t, "data");
    da.read("root", cfg.data_root);
    da.read("split_manifest", cfg.split_manifest);
    da.read("palette", cfg.palette);
    da.read("colormap", cfg.colormap);
    da.read("n_classes", cfg.n_classes);
    da.read("near", cfg.near);
    da.read("far", cfg.far);

    cfg.hp.image_size = cfg.net.image_size;
    return cfg;
}

TrainConfig TrainConfig::from_toml_file(const std::string& path) {
    return from_toml(parse_toml_file(path));
}

void TrainConfig::validate() const {
    net.validate();
    hp.validate();
    if (hp.image_size != net.image_size) throw ConfigError("image_size mismatch");
    if (checkpoint_every < 0 || pseudo_every < 0)
        throw ConfigError("cadence values must be nonnegative");
    if (n_classes < 2) throw ConfigError("n_classes must be at least 2");
    if (!(near < far)) throw ConfigError("depth bounds require near < far");
}

std::string TrainConfig::to_toml() const {
    std::ostringstream os;
    os.precision(17);
    os << "[model]\n";
    os << "mode = \"" << condition_mode_name(net.mode) << "\"\n";
    os << "image_size = " << net.image_size << "\n";
    os << "base_channels = " << net.base_channels << "\n";
    os << "n_resnet_blocks = " << net.n_resnet_blocks_total << "\n";
    os << "encoder_blocks = " << net.encoder_blocks << "\n";
    os << "disc_base_channels = " << net.disc_base_channels << "\n";
    os << "bn_eps = " << net.bn_eps << "\n";
    os << "bn_momentum = " << net.bn_momentum << "\n";
    os << "init_stddev = " << net.init_stddev << "\n";
    os << "\n[loss]\n";
    os << "lambda_l1 = " << hp.lambda_l1 << "\n";
    os << "lambda_idt = " << hp.lambda_idt << "\n";
    os << "lambda_r = " << hp.lambda_r << "\n";
    os << "lambda_d = " << hp.lambda_d << "\n";
    os << "lambda_s = " << hp.lambda_s << "\n";
    os << "lambda_cls = " << hp.lambda_cls << "\n";
    os << "\n[train]\n";
    os << "base_lr = " << hp.base_lr << "\n";
    os << "total_iters = " << hp.total_iters << "\n";
    os << "batch_size = " << hp.batch_size << "\n";
    os << "seed = " << seed << "\n";
    os << "checkpoint_every = " << checkpoint_every << "\n";
    os << "pseudo_every = " << pseudo_every << "\n";
    os << "pseudo_full_decoder = " << (pseudo_full_decoder ? "true" : "false") << "\n";
    os << "log_csv = \"" << log_csv << "\"\n";
    os << "\n[data]\n";
    os << "root = \"" << data_root << "\"\n";
    os << "split_manifest = \"" << split_manifest << "\"\n";
    os << "palette = \"" << palette << "\"\n";
    os << "colormap = \"" << colormap << "\"\n";
    os << "n_classes = " << n_classes << "\n";
    os << "near = " << near << "\n";
    os << "far = " << far << "\n";
    return os.str();
}

uint64_t TrainConfig::config_hash() const {
    // FNV-1a over the resolved dump; identifies a configuration in
    // checkpoints. Path fields are included deliberately: a checkpoint
    // records the exact run setup.
    const std::string dump = to_toml();
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : dump) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

codec::Palette TrainConfig::resolve_palette() const {
    if (palette.empty()) return codec::toy_palette(n_classes);
    if (palette == "urban19") {
        if (n_classes != codec::urban_palette().size())
            throw ConfigError("palette 'urban19' requires n_classes = 19");
        return codec::urban_palette();
    }
    codec::Palette p = codec::load_palette(palette);
    if (p.size() != n_classes)
        throw ConfigError("palette file has " + std::to_string(p.size()) +
                          " colors but n_classes is " + std::to_string(n_classes));
    return p;
}

codec::Colormap TrainConfig::resolve_colormap() const {
    if (colormap.empty()) return codec::depth_colormap();
    return codec::load_colormap(colormap);
}

int64_t TrainConfig::effective_checkpoint_every() const {
    if (checkpoint_every > 0) return checkpoint_every;
    return std::max<int64_t>(1, hp.total_iters / 10);
}

} // namespace dcn::train
