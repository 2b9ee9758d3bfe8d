#include "mtat/io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mtat {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

double to_double(const std::string& s, const std::string& where) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument(where + ": not a number: '" + s + "'");
    }
    if (pos != s.size())
        throw std::invalid_argument(where + ": trailing characters in '" + s + "'");
    return v;
}

long to_long(const std::string& s, const std::string& where) {
    const double v = to_double(s, where);
    if (v != std::floor(v))
        throw std::invalid_argument(where + ": expected an integer, got '" + s + "'");
    return static_cast<long>(v);
}

CoeffForm parse_coeff(const std::string& text, const std::string& where) {
    const auto tok = split_ws(text);
    if (tok.empty()) throw std::invalid_argument(where + ": empty coefficient spec");
    CoeffForm f;
    if (tok[0] == "const") {
        if (tok.size() != 2) throw std::invalid_argument(where + ": const needs 1 value");
        f.type = CoeffForm::Type::Const;
        f.value = to_double(tok[1], where);
    } else if (tok[0] == "gaussian") {
        if (tok.size() != 6)
            throw std::invalid_argument(where + ": gaussian needs base amp cx cy width");
        f.type = CoeffForm::Type::Gaussian;
        f.base = to_double(tok[1], where);
        f.amp = to_double(tok[2], where);
        f.cx = to_double(tok[3], where);
        f.cy = to_double(tok[4], where);
        f.width = to_double(tok[5], where);
        if (f.width <= 0.0) throw std::invalid_argument(where + ": gaussian width must be > 0");
    } else if (tok[0] == "file") {
        if (tok.size() != 2) throw std::invalid_argument(where + ": file needs a path");
        f.type = CoeffForm::Type::File;
        f.path = tok[1];
        if (!std::filesystem::exists(f.path))
            throw std::invalid_argument(where + ": referenced file does not exist: " + f.path);
    } else {
        throw std::invalid_argument(where + ": unknown coefficient form '" + tok[0] + "'");
    }
    return f;
}

std::string coeff_to_string(const CoeffForm& f) {
    switch (f.type) {
        case CoeffForm::Type::Const: return "const " + fmt(f.value);
        case CoeffForm::Type::Gaussian:
            return "gaussian " + fmt(f.base) + " " + fmt(f.amp) + " " + fmt(f.cx) +
                   " " + fmt(f.cy) + " " + fmt(f.width);
        case CoeffForm::Type::File: return "file " + f.path;
    }
    return {};
}

std::vector<PhantomFeature> parse_features(const std::string& text,
                                           const std::string& kind,
                                           const std::string& where) {
    std::vector<PhantomFeature> out;
    std::stringstream ss(text);
    std::string group;
    while (std::getline(ss, group, ';')) {
        const auto tok = split_ws(group);
        if (tok.empty()) continue;
        PhantomFeature f;
        if (kind == "gaussian_bumps" || kind == "smoothed_disks") {
            if (tok.size() != 4)
                throw std::invalid_argument(where + ": feature needs cx cy size amplitude");
            f.cx = to_double(tok[0], where);
            f.cy = to_double(tok[1], where);
            f.r0 = to_double(tok[2], where);
            f.amplitude = to_double(tok[3], where);
        } else if (kind == "annulus") {
            if (tok.size() != 3)
                throw std::invalid_argument(where + ": annulus feature needs r0 r1 amplitude");
            f.r0 = to_double(tok[0], where);
            f.r1 = to_double(tok[1], where);
            f.amplitude = to_double(tok[2], where);
        } else {
            throw std::invalid_argument(where + ": features not valid for kind '" + kind + "'");
        }
        out.push_back(f);
    }
    if (out.empty()) throw std::invalid_argument(where + ": no features given");
    return out;
}

std::string features_to_string(const PhantomConfig& ph) {
    std::string out;
    for (std::size_t i = 0; i < ph.features.size(); ++i) {
        const auto& f = ph.features[i];
        if (i) out += " ; ";
        if (ph.kind == "annulus")
            out += fmt(f.r0) + " " + fmt(f.r1) + " " + fmt(f.amplitude);
        else
            out += fmt(f.cx) + " " + fmt(f.cy) + " " + fmt(f.r0) + " " + fmt(f.amplitude);
    }
    return out;
}

} // namespace

double CoeffForm::eval(double x, double y) const {
    switch (type) {
        case Type::Const: return value;
        case Type::Gaussian: {
            const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            return base + amp * std::exp(-r2 / (width * width));
        }
        case Type::File:
            throw std::logic_error("CoeffForm::eval: file form needs grid sampling");
    }
    return 0.0;
}

double CoeffForm::analytic_max() const {
    switch (type) {
        case Type::Const: return value;
        case Type::Gaussian: return base + std::max(0.0, amp);
        case Type::File:
            throw std::logic_error("CoeffForm::analytic_max: not analytic");
    }
    return 0.0;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::map<std::string, bool> seen;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    std::string features_text;

    auto err = [&](const std::string& msg) {
        throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": " + msg);
    };

    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r");
        std::string body = line.substr(first, last - first + 1);
        if (body.front() == '[') {
            if (body.back() != ']') err("malformed section header");
            section = body.substr(1, body.size() - 2);
            if (section != "geometry" && section != "medium" && section != "run" &&
                section != "reconstruct" && section != "phantom")
                err("unknown section [" + section + "]");
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) err("expected key = value");
        std::string key = body.substr(0, eq);
        std::string value = body.substr(eq + 1);
        auto trim = [](std::string& s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            s = (b == std::string::npos) ? "" : s.substr(b, e - b + 1);
        };
        trim(key);
        trim(value);
        if (key.empty() || value.empty()) err("expected key = value");
        if (section.empty()) err("key outside any section");
        const std::string where = origin + ":" + std::to_string(lineno) + ": " + section + "." + key;
        if (seen[section + "." + key]) err("duplicate key '" + key + "'");
        seen[section + "." + key] = true;

        if (section == "geometry") {
            if (key == "box_halfwidth") cfg.geometry.box_halfwidth = to_double(value, where);
            else if (key == "nx") cfg.geometry.nx = static_cast<int>(to_long(value, where));
            else if (key == "disk_radius") cfg.geometry.disk_radius = to_double(value, where);
            else if (key == "disk_center_x") cfg.geometry.disk_center.x = to_double(value, where);
            else if (key == "disk_center_y") cfg.geometry.disk_center.y = to_double(value, where);
            else if (key == "n_boundary") cfg.geometry.n_boundary = static_cast<int>(to_long(value, where));
            else if (key == "margin_factor") cfg.geometry.margin_factor = to_double(value, where);
            else err("unknown key '" + key + "' in [geometry]");
        } else if (section == "medium") {
            if (key == "c") cfg.medium.c = parse_coeff(value, where);
            else if (key == "a") cfg.medium.a = parse_coeff(value, where);
            else if (key == "b") cfg.medium.b = parse_coeff(value, where);
            else if (key == "q") cfg.medium.q = parse_coeff(value, where);
            else if (key == "alpha_decay") cfg.medium.alpha_decay = to_double(value, where);
            else if (key == "kernel") cfg.medium.kernel_family = value;
            else if (key == "table_expr") cfg.medium.table_expr = value;
            else if (key == "table_T") cfg.medium.table_T = to_double(value, where);
            else if (key == "table_dt") cfg.medium.table_dt = to_double(value, where);
            else if (key == "x0_x") { cfg.medium.x0.x = to_double(value, where); cfg.medium.x0_set = true; }
            else if (key == "x0_y") { cfg.medium.x0.y = to_double(value, where); cfg.medium.x0_set = true; }
            else err("unknown key '" + key + "' in [medium]");
        } else if (section == "run") {
            if (key == "T") cfg.run.T = to_double(value, where);
            else if (key == "cfl_safety") cfg.run.cfl_safety = to_double(value, where);
            else if (key == "snapshot_stride") cfg.run.snapshot_stride = static_cast<int>(to_long(value, where));
            else if (key == "seed") {
                try {
                    std::size_t pos = 0;
                    cfg.run.seed = std::stoull(value, &pos);
                    if (pos != value.size()) throw std::invalid_argument("");
                } catch (const std::exception&) {
                    throw std::invalid_argument(where + ": not an unsigned integer: '" + value + "'");
                }
            }
            else if (key == "wall") cfg.run.wall = value;
            else err("unknown key '" + key + "' in [run]");
        } else if (section == "reconstruct") {
            if (key == "m_max") cfg.reconstruct.m_max = static_cast<int>(to_long(value, where));
            else if (key == "tol_rel") cfg.reconstruct.tol_rel = to_double(value, where);
            else err("unknown key '" + key + "' in [reconstruct]");
        } else { // phantom
            if (key == "kind") cfg.phantom.kind = value;
            else if (key == "features") features_text = value; // parsed once the kind is known
            else if (key == "path") cfg.phantom.path = value;
            else err("unknown key '" + key + "' in [phantom]");
        }
    }

    if (!features_text.empty())
        cfg.phantom.features =
            parse_features(features_text, cfg.phantom.kind, origin + ": phantom.features");

    // structural validation
    auto require = [&](bool ok, const std::string& msg) {
        if (!ok) throw std::invalid_argument(origin + ": " + msg);
    };
    require(cfg.geometry.box_halfwidth > 0.0, "geometry.box_halfwidth must be set > 0");
    require(cfg.geometry.nx >= 16, "geometry.nx must be >= 16");
    require(cfg.geometry.disk_radius > 0.0, "geometry.disk_radius must be set > 0");
    require(cfg.geometry.disk_radius < cfg.geometry.box_halfwidth,
            "geometry.disk_radius must be smaller than box_halfwidth");
    require(cfg.geometry.n_boundary >= 8, "geometry.n_boundary must be >= 8");
    require(cfg.geometry.margin_factor > 0.0, "geometry.margin_factor must be > 0");
    require(cfg.run.T > 0.0, "run.T must be set > 0");
    require(cfg.run.cfl_safety > 0.0 && cfg.run.cfl_safety <= 1.0,
            "run.cfl_safety must be in (0,1]");
    require(cfg.run.wall == "hard" || cfg.run.wall == "absorbing",
            "run.wall must be 'hard' or 'absorbing'");
    require(cfg.medium.alpha_decay > 0.0, "medium.alpha_decay must be > 0");
    require(cfg.medium.kernel_family == "exponential" || cfg.medium.kernel_family == "tabulated",
            "medium.kernel must be 'exponential' or 'tabulated'");
    require(cfg.reconstruct.m_max >= 1, "reconstruct.m_max must be >= 1");
    require(cfg.reconstruct.tol_rel > 0.0, "reconstruct.tol_rel must be > 0");
    require(cfg.phantom.kind == "gaussian_bumps" || cfg.phantom.kind == "smoothed_disks" ||
                cfg.phantom.kind == "annulus" || cfg.phantom.kind == "file",
            "phantom.kind must be gaussian_bumps|smoothed_disks|annulus|file");
    if (cfg.phantom.kind == "file")
        require(std::filesystem::exists(cfg.phantom.path),
                "phantom.path does not exist: " + cfg.phantom.path);
    if (!cfg.medium.x0_set) cfg.medium.x0 = cfg.geometry.disk_center;

    cfg.config_hash = fnv1a64(dump_config(cfg));
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

std::string dump_config(const RunConfig& cfg) {
    std::ostringstream o;
    o << "[geometry]\n";
    o << "box_halfwidth = " << fmt(cfg.geometry.box_halfwidth) << "\n";
    o << "nx = " << cfg.geometry.nx << "\n";
    o << "disk_radius = " << fmt(cfg.geometry.disk_radius) << "\n";
    o << "disk_center_x = " << fmt(cfg.geometry.disk_center.x) << "\n";
    o << "disk_center_y = " << fmt(cfg.geometry.disk_center.y) << "\n";
    o << "n_boundary = " << cfg.geometry.n_boundary << "\n";
    o << "margin_factor = " << fmt(cfg.geometry.margin_factor) << "\n";
    o << "[medium]\n";
    o << "c = " << coeff_to_string(cfg.medium.c) << "\n";
    o << "a = " << coeff_to_string(cfg.medium.a) << "\n";
    o << "b = " << coeff_to_string(cfg.medium.b) << "\n";
    o << "q = " << coeff_to_string(cfg.medium.q) << "\n";
    o << "alpha_decay = " << fmt(cfg.medium.alpha_decay) << "\n";
    o << "kernel = " << cfg.medium.kernel_family << "\n";
    if (!cfg.medium.table_expr.empty()) o << "table_expr = " << cfg.medium.table_expr << "\n";
    if (cfg.medium.table_T > 0.0) o << "table_T = " << fmt(cfg.medium.table_T) << "\n";
    if (cfg.medium.table_dt > 0.0) o << "table_dt = " << fmt(cfg.medium.table_dt) << "\n";
    o << "x0_x = " << fmt(cfg.medium.x0.x) << "\n";
    o << "x0_y = " << fmt(cfg.medium.x0.y) << "\n";
    o << "[run]\n";
    o << "T = " << fmt(cfg.run.T) << "\n";
    o << "cfl_safety = " << fmt(cfg.run.cfl_safety) << "\n";
    o << "snapshot_stride = " << cfg.run.snapshot_stride << "\n";
    o << "seed = " << cfg.run.seed << "\n";
    o << "wall = " << cfg.run.wall << "\n";
    o << "[reconstruct]\n";
    o << "m_max = " << cfg.reconstruct.m_max << "\n";
    o << "tol_rel = " << fmt(cfg.reconstruct.tol_rel) << "\n";
    o << "[phantom]\n";
    o << "kind = " << cfg.phantom.kind << "\n";
    if (cfg.phantom.kind == "file") o << "path = " << cfg.phantom.path << "\n";
    else o << "features = " << features_to_string(cfg.phantom) << "\n";
    return o.str();
}

namespace {

/// Nodal lookup into a file-backed coefficient: exact at run-grid nodes.
ScalarFn file_field_fn(const Field& f, const Grid& grid) {
    return [f, grid](double x, double y) {
        const int i = static_cast<int>(std::lround((x - grid.origin.x) / grid.h));
        const int j = static_cast<int>(std::lround((y - grid.origin.y) / grid.h));
        if (i < 0 || j < 0 || i >= f.nx || j >= f.ny)
            throw std::invalid_argument("file coefficient: point off the grid");
        return f.at(i, j);
    };
}

ScalarFn coeff_fn(const CoeffForm& form, const Grid& grid) {
    if (form.type == CoeffForm::Type::File) {
        Field f = read_field(form.path);
        if (f.nx != grid.nx || f.ny != grid.ny)
            throw std::invalid_argument("file coefficient '" + form.path +
                                        "' does not match the run grid");
        return file_field_fn(f, grid);
    }
    CoeffForm copy = form;
    return [copy](double x, double y) { return copy.eval(x, y); };
}

std::vector<double> table_from_expr(const std::string& expr, double T, double dt,
                                    int& n_out) {
    const auto tok = split_ws(expr);
    if (tok.size() < 1) throw std::invalid_argument("medium.table_expr: empty");
    const int n = static_cast<int>(std::ceil(T / dt)) + 1;
    n_out = n;
    std::vector<double> g(n);
    if (tok[0] == "exp") {
        if (tok.size() != 2) throw std::invalid_argument("table_expr exp needs a rate");
        const double rate = to_double(tok[1], "table_expr");
        for (int j = 0; j < n; ++j) g[j] = std::exp(-rate * j * dt);
    } else if (tok[0] == "cos") {
        if (tok.size() != 2) throw std::invalid_argument("table_expr cos needs a frequency");
        const double om = to_double(tok[1], "table_expr");
        for (int j = 0; j < n; ++j) g[j] = std::cos(om * j * dt);
    } else {
        throw std::invalid_argument("table_expr must be 'exp <rate>' or 'cos <omega>'");
    }
    return g;
}

} // namespace

Assembled assemble(const RunConfig& cfg) {
    Assembled as;
    as.cfg = cfg;

    // conservative wave-speed bound for grid construction and margin checks
    double c_max_est = 1.0;
    if (cfg.medium.c.type != CoeffForm::Type::File)
        c_max_est = std::max(1.0, cfg.medium.c.analytic_max());

    as.grid = build_grid(cfg.geometry.box_halfwidth, cfg.geometry.nx, cfg.run.T,
                         c_max_est, cfg.run.cfl_safety);
    as.domain = make_domain(cfg.geometry.disk_center, cfg.geometry.disk_radius,
                            cfg.geometry.n_boundary, as.grid);

    CoefficientSpec spec;
    spec.c = coeff_fn(cfg.medium.c, as.grid);
    spec.a = coeff_fn(cfg.medium.a, as.grid);
    spec.b = coeff_fn(cfg.medium.b, as.grid);
    spec.q = coeff_fn(cfg.medium.q, as.grid);
    spec.alpha_decay = cfg.medium.alpha_decay;
    if (cfg.medium.kernel_family == "tabulated") {
        spec.family = MemoryKernel::Family::Tabulated;
        const double tT = cfg.medium.table_T > 0.0 ? cfg.medium.table_T : cfg.run.T;
        const double tdt = cfg.medium.table_dt > 0.0 ? cfg.medium.table_dt : tT / 2048.0;
        const auto tok = split_ws(cfg.medium.table_expr);
        if (!tok.empty() && tok[0] == "file") {
            if (tok.size() != 2) throw std::invalid_argument("table_expr file needs a path");
            Field f = read_field(tok[1]);
            if (f.ny != 1) throw std::invalid_argument("kernel table file must be 1 x n");
            spec.table = f.v;
            spec.table_dt = tdt;
        } else {
            int n = 0;
            spec.table = table_from_expr(cfg.medium.table_expr, tT, tdt, n);
            spec.table_dt = tdt;
        }
    }
    as.medium = make_medium(spec, as.grid, as.domain);

    if (as.medium.c_max > c_max_est + 1e-12)
        throw std::invalid_argument("assemble: medium c exceeds the assumed bound");
    validate_margin(as.domain, as.grid, as.medium.c_max, cfg.run.T,
                    cfg.geometry.margin_factor);

    if (cfg.phantom.kind == "file") {
        Field f = read_field(cfg.phantom.path);
        if (f.nx != as.grid.nx || f.ny != as.grid.ny)
            throw std::invalid_argument("phantom file does not match the run grid");
        as.phantom.f = std::move(f);
    } else {
        PhantomKind kind = PhantomKind::GaussianBumps;
        if (cfg.phantom.kind == "smoothed_disks") kind = PhantomKind::SmoothedDisks;
        else if (cfg.phantom.kind == "annulus") kind = PhantomKind::Annulus;
        as.phantom = make_phantom(kind, cfg.phantom.features, as.grid, as.domain);
    }
    return as;
}

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    buf.append(b, 4);
}
void put_u64(std::string& buf, std::uint64_t v) {
    char b[8];
    std::memcpy(b, &v, 8);
    buf.append(b, 8);
}
void put_f64(std::string& buf, double v) {
    char b[8];
    std::memcpy(b, &v, 8);
    buf.append(b, 8);
}

class Reader {
public:
    Reader(const std::string& path) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        data_ = ss.str();
    }
    std::uint32_t u32() { return get<std::uint32_t>(); }
    std::uint64_t u64() { return get<std::uint64_t>(); }
    double f64() { return get<double>(); }
    void magic(const char* m) {
        need(4);
        if (std::memcmp(data_.data() + pos_, m, 4) != 0)
            throw std::runtime_error(path_ + ": bad magic, not a " + m + " file");
        pos_ += 4;
    }
    void expect_total(std::size_t payload_bytes) {
        if (data_.size() != pos_ + payload_bytes + 4)
            throw std::runtime_error(path_ + ": size does not match declared dimensions");
    }
    void payload(double* dst, std::size_t count) {
        need(count * 8);
        std::memcpy(dst, data_.data() + pos_, count * 8);
        pos_ += count * 8;
    }
    void check_crc() {
        const std::uint32_t stored = u32();
        const std::uint32_t computed = static_cast<std::uint32_t>(
            crc32(0L, reinterpret_cast<const Bytef*>(data_.data()),
                  static_cast<uInt>(pos_ - 4)));
        if (stored != computed)
            throw std::runtime_error(path_ + ": checksum mismatch (corrupt or truncated)");
    }

private:
    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void need(std::size_t n) {
        if (pos_ + n > data_.size())
            throw std::runtime_error(path_ + ": truncated file");
    }
    std::string path_;
    std::string data_;
    std::size_t pos_{0};
};

void write_blob(const std::string& path, std::string& buf) {
    const std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(buf.data()),
              static_cast<uInt>(buf.size())));
    put_u32(buf, crc);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace

void write_field(const std::string& path, const Field& f, std::uint64_t cfg_hash) {
    std::string buf;
    buf.reserve(24 + f.v.size() * 8);
    buf.append("MTAT", 4);
    put_u32(buf, 1);
    put_u32(buf, static_cast<std::uint32_t>(f.nx));
    put_u32(buf, static_cast<std::uint32_t>(f.ny));
    put_u64(buf, cfg_hash);
    for (double v : f.v) put_f64(buf, v);
    write_blob(path, buf);
}

Field read_field(const std::string& path, std::uint64_t* cfg_hash) {
    Reader r(path);
    r.magic("MTAT");
    const std::uint32_t version = r.u32();
    if (version != 1) throw std::runtime_error(path + ": unsupported version");
    const std::uint32_t nx = r.u32();
    const std::uint32_t ny = r.u32();
    if (nx == 0 || ny == 0 || static_cast<std::uint64_t>(nx) * ny > (1ULL << 28))
        throw std::runtime_error(path + ": implausible dimensions");
    const std::uint64_t hash = r.u64();
    if (cfg_hash) *cfg_hash = hash;
    r.expect_total(static_cast<std::size_t>(nx) * ny * 8);
    Field f(static_cast<int>(nx), static_cast<int>(ny));
    r.payload(f.v.data(), f.v.size());
    r.check_crc();
    return f;
}

void write_trace(const std::string& path, const BoundaryTrace& t,
                 std::uint64_t cfg_hash) {
    std::string buf;
    buf.reserve(44 + t.values.size() * 8);
    buf.append("MTRC", 4);
    put_u32(buf, 1);
    put_u32(buf, static_cast<std::uint32_t>(t.n_time));
    put_u32(buf, static_cast<std::uint32_t>(t.n_boundary));
    put_f64(buf, t.dt);
    put_f64(buf, t.radius);
    put_u32(buf, t.kind == BoundaryTrace::Kind::Raw ? 0u : 1u);
    put_u64(buf, cfg_hash);
    for (double v : t.values) put_f64(buf, v);
    write_blob(path, buf);
}

BoundaryTrace read_trace(const std::string& path, std::uint64_t* cfg_hash) {
    Reader r(path);
    r.magic("MTRC");
    const std::uint32_t version = r.u32();
    if (version != 1) throw std::runtime_error(path + ": unsupported version");
    BoundaryTrace t;
    t.n_time = static_cast<int>(r.u32());
    t.n_boundary = static_cast<int>(r.u32());
    t.dt = r.f64();
    t.radius = r.f64();
    const std::uint32_t kind = r.u32();
    if (kind > 1) throw std::runtime_error(path + ": bad trace kind");
    t.kind = kind == 0 ? BoundaryTrace::Kind::Raw : BoundaryTrace::Kind::Integrated;
    const std::uint64_t hash = r.u64();
    if (cfg_hash) *cfg_hash = hash;
    if (t.n_time <= 0 || t.n_boundary <= 0 ||
        static_cast<std::uint64_t>(t.n_time) * t.n_boundary > (1ULL << 28))
        throw std::runtime_error(path + ": implausible dimensions");
    r.expect_total(static_cast<std::size_t>(t.n_time) * t.n_boundary * 8);
    t.values.resize(static_cast<std::size_t>(t.n_time) * t.n_boundary);
    r.payload(t.values.data(), t.values.size());
    r.check_crc();
    return t;
}

void export_pgm(const Field& f, const std::string& path, PgmScaling scaling,
                std::uint64_t cfg_hash) {
    if (!all_finite(f)) throw std::invalid_argument("export_pgm: non-finite field");
    double lo = f.v.empty() ? 0.0 : f.v[0], hi = lo;
    for (double v : f.v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::string buf;
    char header[128];
    std::snprintf(header, sizeof(header), "P5\n# config=%016llx\n%d %d\n65535\n",
                  static_cast<unsigned long long>(cfg_hash), f.nx, f.ny);
    buf.append(header);
    auto put_px = [&buf](int v) {
        const int p = std::clamp(v, 0, 65535);
        buf.push_back(static_cast<char>((p >> 8) & 0xff));
        buf.push_back(static_cast<char>(p & 0xff));
    };
    // image rows top to bottom = decreasing y
    for (int j = f.ny - 1; j >= 0; --j) {
        for (int i = 0; i < f.nx; ++i) {
            const double v = f.at(i, j);
            if (scaling == PgmScaling::Symmetric) {
                const double M = std::max(std::abs(lo), std::abs(hi));
                const int p = M == 0.0 ? 32768
                                       : 32768 + static_cast<int>(std::lround(v / M * 32767.0));
                put_px(p);
            } else {
                const int p = hi == lo ? 32768
                                       : static_cast<int>(std::lround((v - lo) / (hi - lo) * 65535.0));
                put_px(p);
            }
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_energy_csv(const std::string& path, const EnergyTrace& et,
                      std::uint64_t cfg_hash) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    char line[64];
    std::snprintf(line, sizeof(line), "# config=%016llx\n",
                  static_cast<unsigned long long>(cfg_hash));
    out << line;
    out << "step,t,E_box,E_Omega,E_Omega_c,diss_damping,diss_memory,extended_energy\n";
    for (std::size_t n = 0; n < et.t.size(); ++n) {
        out << n << ',' << fmt(et.t[n]) << ',' << fmt(et.E_box[n]) << ','
            << fmt(et.E_omega[n]) << ',' << fmt(et.E_omega_c[n]) << ','
            << fmt(et.diss_damping[n]) << ',' << fmt(et.diss_memory[n]) << ','
            << fmt(et.extended[n]) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace mtat
