#include "sedkit/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sedkit/postproc.hpp"

namespace sedkit::io {

namespace {

fs::path with_suffix(const fs::path& stem, const char* suffix) { return fs::path(stem.string() + suffix); }

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_bytes(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::io, "cannot write " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(ErrorKind::io, "write failed for " + path.string());
    }
}

template <typename T>
void append_le(std::string& out, T value) {
    static_assert(std::endian::native == std::endian::little, "little-endian host required");
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

}  // namespace

void write_wav(const fs::path& path, const synth::AudioClip& clip) {
    const auto n = static_cast<std::uint32_t>(clip.samples.size());
    std::string b;
    b.reserve(44 + 2 * static_cast<std::size_t>(n));
    b += "RIFF";
    put_u32(b, 36 + 2 * n);
    b += "WAVE";
    b += "fmt ";
    put_u32(b, 16);
    put_u16(b, 1);  // PCM
    put_u16(b, 1);  // mono
    put_u32(b, static_cast<std::uint32_t>(clip.sample_rate));
    put_u32(b, static_cast<std::uint32_t>(clip.sample_rate) * 2);
    put_u16(b, 2);
    put_u16(b, 16);
    b += "data";
    put_u32(b, 2 * n);
    for (double x : clip.samples) {
        const double q = std::round(std::clamp(x, -1.0, 1.0) * 32767.0);
        put_u16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
    write_bytes(path, b);
}

synth::AudioClip read_wav(const fs::path& path) {
    const std::string bytes = read_bytes(path);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
        throw Error(ErrorKind::io, path.string() + " is not a RIFF/WAVE file");
    }
    synth::AudioClip clip;
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::string id = bytes.substr(pos, 4);
        const std::uint32_t size = get_u32(p + pos + 4);
        const std::size_t body = pos + 8;
        if (body + size > bytes.size()) {
            throw Error(ErrorKind::io, path.string() + ": truncated chunk '" + id + "'");
        }
        if (id == "fmt ") {
            if (size < 16 || get_u16(p + body) != 1 || get_u16(p + body + 2) != 1 || get_u16(p + body + 14) != 16) {
                throw Error(ErrorKind::io, path.string() + ": only 16-bit mono PCM is supported");
            }
            clip.sample_rate = static_cast<int>(get_u32(p + body + 4));
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) {
                throw Error(ErrorKind::io, path.string() + ": data chunk before fmt chunk");
            }
            clip.samples.resize(size / 2);
            for (std::size_t i = 0; i < clip.samples.size(); ++i) {
                const auto v = static_cast<std::int16_t>(get_u16(p + body + 2 * i));
                clip.samples[i] = static_cast<double>(v) / 32767.0;
            }
            return clip;
        }
        pos = body + size + (size & 1U);
    }
    throw Error(ErrorKind::io, path.string() + ": no data chunk");
}

void write_annotations(const fs::path& path, std::vector<EventAnnotation> events) {
    postproc::sort_events(events);
    std::string out;
    char line[64];
    for (const auto& ev : events) {
        std::snprintf(line, sizeof(line), "%.6f\t%.6f\t", ev.onset, ev.offset);
        out += line;
        out += ev.label;
        out += '\n';
    }
    write_bytes(path, out);
}

std::vector<EventAnnotation> read_annotations(const fs::path& path) {
    std::istringstream in(read_bytes(path));
    std::vector<EventAnnotation> events;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) {
            throw Error(ErrorKind::io, path.string() + ":" + std::to_string(lineno) + ": expected three columns");
        }
        EventAnnotation ev;
        try {
            ev.onset = std::stod(line.substr(0, t1));
            ev.offset = std::stod(line.substr(t1 + 1, t2 - t1 - 1));
        } catch (const std::exception&) {
            throw Error(ErrorKind::io, path.string() + ":" + std::to_string(lineno) + ": bad time value");
        }
        ev.label = line.substr(t2 + 1);
        events.push_back(std::move(ev));
    }
    postproc::sort_events(events);
    return events;
}

void write_matrix_f32(const fs::path& stem, const Matrix& m, nlohmann::json header) {
    std::string blob;
    blob.reserve(static_cast<std::size_t>(m.size()) * 4);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            append_le(blob, static_cast<float>(m(r, c)));
        }
    }
    header["rows"] = m.rows();
    header["cols"] = m.cols();
    header["dtype"] = "float32-le";
    header["layout"] = "row-major";
    write_bytes(with_suffix(stem, ".f32"), blob);
    write_bytes(with_suffix(stem, ".json"), header.dump(2) + "\n");
}

Matrix read_matrix_f32(const fs::path& stem, nlohmann::json* header) {
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(read_bytes(with_suffix(stem, ".json")));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::io, with_suffix(stem, ".json").string() + ": " + e.what());
    }
    const auto rows = h.at("rows").get<Eigen::Index>();
    const auto cols = h.at("cols").get<Eigen::Index>();
    const std::string blob = read_bytes(with_suffix(stem, ".f32"));
    if (blob.size() != static_cast<std::size_t>(rows * cols) * 4) {
        throw Error(ErrorKind::io, with_suffix(stem, ".f32").string() + ": size does not match header");
    }
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            float v;
            std::memcpy(&v, blob.data() + 4 * static_cast<std::size_t>(r * cols + c), 4);
            m(r, c) = v;
        }
    }
    if (header != nullptr) *header = std::move(h);
    return m;
}

void write_weights(const fs::path& stem, const WeightsFile& w) {
    std::string blob;
    blob.reserve(w.params.size() * 8);
    for (double v : w.params) append_le(blob, v);
    const nlohmann::json header{{"format", "sedkit-weights"},
                                {"version", 1},
                                {"experiment", w.experiment},
                                {"architecture", w.network},
                                {"seed", w.seed},
                                {"epoch", w.epoch},
                                {"n_params", w.params.size()},
                                {"dtype", "float64-le"},
                                {"blob", with_suffix(stem, ".bin").filename().string()}};
    write_bytes(with_suffix(stem, ".bin"), blob);
    write_bytes(with_suffix(stem, ".json"), header.dump(2) + "\n");
}

WeightsFile read_weights(const fs::path& stem) {
    if (!fs::exists(with_suffix(stem, ".json"))) {
        throw Error(ErrorKind::dependency, "missing weights " + with_suffix(stem, ".json").string());
    }
    WeightsFile w;
    try {
        const auto h = nlohmann::json::parse(read_bytes(with_suffix(stem, ".json")));
        if (h.at("format").get<std::string>() != "sedkit-weights") {
            throw Error(ErrorKind::io, "not a weights header");
        }
        w.network = h.at("architecture").get<model::NetworkConfig>();
        w.seed = h.at("seed").get<std::uint64_t>();
        w.epoch = h.at("epoch").get<int>();
        w.experiment = h.value("experiment", std::string());
        const auto n = h.at("n_params").get<std::size_t>();
        const std::string blob = read_bytes(with_suffix(stem, ".bin"));
        if (blob.size() != n * 8) {
            throw Error(ErrorKind::io, with_suffix(stem, ".bin").string() + ": size does not match header");
        }
        w.params.resize(n);
        std::memcpy(w.params.data(), blob.data(), blob.size());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::io, with_suffix(stem, ".json").string() + ": " + e.what());
    }
    return w;
}

void write_text(const fs::path& path, const std::string& text) { write_bytes(path, text); }

std::string read_text(const fs::path& path) { return read_bytes(path); }

}  // namespace sedkit::io
