#include "crlkit/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "crlkit/crc32.hpp"

namespace crlkit {

namespace {

// Little-endian byte buffer writer/reader. The host is assumed
// little-endian friendly via explicit byte packing, so files are portable.

struct ByteWriter {
    std::vector<unsigned char> bytes;

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>(bits >> (8 * i)));
    }
    void f64_block(const std::vector<double>& vals) {
        for (double v : vals) f64(v);
    }
};

struct ByteReader {
    const unsigned char* p;
    std::size_t len;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > len) throw IoError("checkpoint: truncated payload");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[pos + i]) << (8 * i);
        pos += 8;
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    void f64_block(std::vector<double>& out, std::size_t n) {
        out.resize(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = f64();
    }
};

void write_container(const std::string& path, CheckpointType type, const ByteWriter& payload) {
    ByteWriter body;
    body.u32(static_cast<std::uint32_t>(type));
    body.bytes.insert(body.bytes.end(), payload.bytes.begin(), payload.bytes.end());
    std::uint32_t crc = crc32(body.bytes.data(), body.bytes.size());

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("checkpoint: cannot open '" + path + "' for writing");
    out.write(kCheckpointMagic, 8);
    out.write(reinterpret_cast<const char*>(body.bytes.data()),
              static_cast<std::streamsize>(body.bytes.size()));
    ByteWriter tail;
    tail.u32(crc);
    out.write(reinterpret_cast<const char*>(tail.bytes.data()), 4);
    if (!out) throw IoError("checkpoint: write to '" + path + "' failed");
}

std::vector<unsigned char> read_container(const std::string& path, CheckpointType& type) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open '" + path + "'");
    std::vector<unsigned char> all((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (all.size() < 16) throw IoError("checkpoint: file too short");
    if (std::memcmp(all.data(), kCheckpointMagic, 8) != 0)
        throw IoError("checkpoint: bad magic (not a CRLKIT01 file)");
    std::size_t body_len = all.size() - 12;
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= static_cast<std::uint32_t>(all[8 + body_len + i]) << (8 * i);
    std::uint32_t computed = crc32(all.data() + 8, body_len);
    if (stored != computed) throw IoError("checkpoint: CRC mismatch (corrupt file)");

    ByteReader r{all.data() + 8, body_len};
    std::uint32_t t = r.u32();
    if (t < 1 || t > 3) throw IoError("checkpoint: unknown type id " + std::to_string(t));
    type = static_cast<CheckpointType>(t);
    return std::vector<unsigned char>(all.begin() + 12, all.begin() + 8 + body_len);
}

void write_matrix(ByteWriter& w, const DenseMatrix& m) { w.f64_block(m.data); }
void write_vector(ByteWriter& w, const DenseVector& v) { w.f64_block(v.data); }

DenseMatrix read_matrix(ByteReader& r, std::size_t rows, std::size_t cols) {
    DenseMatrix m(rows, cols);
    r.f64_block(m.data, rows * cols);
    return m;
}

DenseVector read_vector(ByteReader& r, std::size_t n) {
    DenseVector v(n);
    r.f64_block(v.data, n);
    return v;
}

void write_corrnet_payload(ByteWriter& w, const CorrNetParams& p) {
    w.u32(static_cast<std::uint32_t>(p.k));
    w.u32(static_cast<std::uint32_t>(p.d1));
    w.u32(static_cast<std::uint32_t>(p.d2));
    w.u32(static_cast<std::uint32_t>(p.f_act));
    w.u32(static_cast<std::uint32_t>(p.g_act));
    w.u32(static_cast<std::uint32_t>(p.recon_loss));
    write_matrix(w, p.W);
    write_matrix(w, p.V);
    write_matrix(w, p.Wp);
    write_matrix(w, p.Vp);
    write_vector(w, p.b);
    write_vector(w, p.bp);
}

Activation activation_from_id(std::uint32_t id) {
    if (id > 2) throw IoError("checkpoint: bad activation id");
    return static_cast<Activation>(id);
}

ReconLoss recon_from_id(std::uint32_t id) {
    if (id > 1) throw IoError("checkpoint: bad reconstruction loss id");
    return static_cast<ReconLoss>(id);
}

CorrNetParams read_corrnet_payload(ByteReader& r) {
    CorrNetParams p;
    p.k = r.u32();
    p.d1 = r.u32();
    p.d2 = r.u32();
    p.f_act = activation_from_id(r.u32());
    p.g_act = activation_from_id(r.u32());
    p.recon_loss = recon_from_id(r.u32());
    p.W = read_matrix(r, p.k, p.d1);
    p.V = read_matrix(r, p.k, p.d2);
    p.Wp = read_matrix(r, p.d1, p.k);
    p.Vp = read_matrix(r, p.d2, p.k);
    p.b = read_vector(r, p.k);
    p.bp = read_vector(r, p.d1 + p.d2);
    validate(p);
    return p;
}

}  // namespace

void save_checkpoint(const std::string& path, const CorrNetParams& p) {
    ByteWriter w;
    write_corrnet_payload(w, p);
    write_container(path, CheckpointType::CorrNet, w);
}

void save_checkpoint(const std::string& path, const DeepCorrNet& net) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(net.f_act));
    w.u32(static_cast<std::uint32_t>(net.g_act));
    w.u32(static_cast<std::uint32_t>(net.recon_loss));
    w.u32(static_cast<std::uint32_t>(net.raw_d1));
    w.u32(static_cast<std::uint32_t>(net.raw_d2));
    w.u32(static_cast<std::uint32_t>(net.layer_sizes.size()));
    for (std::size_t s : net.layer_sizes) w.u32(static_cast<std::uint32_t>(s));
    auto write_layers = [&](const std::vector<DeepLayer>& layers) {
        for (const DeepLayer& l : layers) {
            write_matrix(w, l.W);
            write_vector(w, l.b);
        }
    };
    write_layers(net.x_stack);
    write_layers(net.y_stack);
    write_corrnet_payload(w, net.top);
    write_layers(net.x_dec);
    write_layers(net.y_dec);
    write_container(path, CheckpointType::DeepCorrNet, w);
}

void save_checkpoint(const std::string& path, const CcaModel& model) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(model.mean_x.len()));
    w.u32(static_cast<std::uint32_t>(model.mean_y.len()));
    w.u32(static_cast<std::uint32_t>(model.correlations.len()));
    write_vector(w, model.mean_x);
    write_vector(w, model.mean_y);
    write_matrix(w, model.proj_x);
    write_matrix(w, model.proj_y);
    write_vector(w, model.correlations);
    write_container(path, CheckpointType::Cca, w);
}

CheckpointType peek_checkpoint_type(const std::string& path) {
    CheckpointType type;
    read_container(path, type);
    return type;
}

CorrNetParams load_corrnet_checkpoint(const std::string& path) {
    CheckpointType type;
    std::vector<unsigned char> payload = read_container(path, type);
    if (type != CheckpointType::CorrNet)
        throw IoError("checkpoint: '" + path + "' does not hold a shallow corrnet");
    ByteReader r{payload.data(), payload.size()};
    return read_corrnet_payload(r);
}

DeepCorrNet load_deep_checkpoint(const std::string& path) {
    CheckpointType type;
    std::vector<unsigned char> payload = read_container(path, type);
    if (type != CheckpointType::DeepCorrNet)
        throw IoError("checkpoint: '" + path + "' does not hold a deep corrnet");
    ByteReader r{payload.data(), payload.size()};
    DeepCorrNet net;
    net.f_act = activation_from_id(r.u32());
    net.g_act = activation_from_id(r.u32());
    net.recon_loss = recon_from_id(r.u32());
    net.raw_d1 = r.u32();
    net.raw_d2 = r.u32();
    std::size_t depth = r.u32();
    if (depth < 2 || depth > 16) throw IoError("checkpoint: implausible deep depth");
    net.layer_sizes.resize(depth);
    for (std::size_t i = 0; i < depth; ++i) net.layer_sizes[i] = r.u32();

    std::size_t m = depth - 1;  // pathway layer count
    auto read_stack = [&](std::size_t in0) {
        std::vector<DeepLayer> layers;
        std::size_t in = in0;
        for (std::size_t i = 0; i < m; ++i) {
            std::size_t out = net.layer_sizes[i];
            DeepLayer l;
            l.W = read_matrix(r, out, in);
            l.b = read_vector(r, out);
            layers.push_back(std::move(l));
            in = out;
        }
        return layers;
    };
    net.x_stack = read_stack(net.raw_d1);
    net.y_stack = read_stack(net.raw_d2);
    net.top = read_corrnet_payload(r);
    auto read_dec = [&](std::size_t raw) {
        // Mirrors the encoder widths in reverse, ending at raw.
        std::vector<DeepLayer> layers;
        for (std::size_t j = 0; j < m; ++j) {
            std::size_t in = net.layer_sizes[m - 1 - j];
            std::size_t out = j + 1 < m ? net.layer_sizes[m - 2 - j] : raw;
            DeepLayer l;
            l.W = read_matrix(r, out, in);
            l.b = read_vector(r, out);
            layers.push_back(std::move(l));
        }
        return layers;
    };
    net.x_dec = read_dec(net.raw_d1);
    net.y_dec = read_dec(net.raw_d2);
    return net;
}

CcaModel load_cca_checkpoint(const std::string& path) {
    CheckpointType type;
    std::vector<unsigned char> payload = read_container(path, type);
    if (type != CheckpointType::Cca)
        throw IoError("checkpoint: '" + path + "' does not hold a CCA model");
    ByteReader r{payload.data(), payload.size()};
    std::size_t d1 = r.u32(), d2 = r.u32(), k = r.u32();
    CcaModel model;
    model.mean_x = read_vector(r, d1);
    model.mean_y = read_vector(r, d2);
    model.proj_x = read_matrix(r, d1, k);
    model.proj_y = read_matrix(r, d2, k);
    model.correlations = read_vector(r, k);
    return model;
}

}  // namespace crlkit
