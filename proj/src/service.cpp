#include "murreid/service.hpp"

#include <array>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

namespace murreid {

namespace {

constexpr std::string_view kB64Chars =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

} // namespace

std::string base64_encode(std::string_view bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    size_t i = 0;
    while (i + 3 <= bytes.size()) {
        const uint32_t v = static_cast<uint8_t>(bytes[i]) << 16 |
                           static_cast<uint8_t>(bytes[i + 1]) << 8 |
                           static_cast<uint8_t>(bytes[i + 2]);
        out += kB64Chars[(v >> 18) & 63];
        out += kB64Chars[(v >> 12) & 63];
        out += kB64Chars[(v >> 6) & 63];
        out += kB64Chars[v & 63];
        i += 3;
    }
    const size_t rem = bytes.size() - i;
    if (rem == 1) {
        const uint32_t v = static_cast<uint8_t>(bytes[i]) << 16;
        out += kB64Chars[(v >> 18) & 63];
        out += kB64Chars[(v >> 12) & 63];
        out += "==";
    } else if (rem == 2) {
        const uint32_t v = static_cast<uint8_t>(bytes[i]) << 16 |
                           static_cast<uint8_t>(bytes[i + 1]) << 8;
        out += kB64Chars[(v >> 18) & 63];
        out += kB64Chars[(v >> 12) & 63];
        out += kB64Chars[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

std::string base64_decode(std::string_view encoded) {
    std::array<int8_t, 256> lut;
    lut.fill(-1);
    for (size_t i = 0; i < kB64Chars.size(); ++i)
        lut[static_cast<uint8_t>(kB64Chars[i])] = static_cast<int8_t>(i);

    std::string out;
    out.reserve(encoded.size() / 4 * 3);
    uint32_t buf = 0;
    int bits = 0;
    size_t padding = 0;
    for (char c : encoded) {
        if (c == '\n' || c == '\r') continue;
        if (c == '=') {
            ++padding;
            continue;
        }
        if (padding > 0) throw std::invalid_argument("base64: data after padding");
        const int8_t v = lut[static_cast<uint8_t>(c)];
        if (v < 0) throw std::invalid_argument("base64: invalid character");
        buf = buf << 6 | static_cast<uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out += static_cast<char>((buf >> bits) & 0xFF);
        }
    }
    if (padding > 2) throw std::invalid_argument("base64: too much padding");
    return out;
}

void setup_routes(httplib::Server& server, const ModelBundle& bundle) {
    using nlohmann::ordered_json;

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok", "text/plain");
    });

    server.Post("/classify", [&bundle](const httplib::Request& req, httplib::Response& res) {
        auto fail = [&res](int status, const std::string& message) {
            res.status = status;
            res.set_content(ordered_json{{"error", message}}.dump(), "application/json");
        };

        ordered_json body;
        try {
            body = ordered_json::parse(req.body);
        } catch (const std::exception&) {
            return fail(400, "malformed JSON");
        }
        if (!body.is_object() || !body.contains("transcript") || !body["transcript"].is_string())
            return fail(400, "missing string field 'transcript'");

        std::optional<Waveform> audio;
        if (body.contains("audio_wav_base64") && !body["audio_wav_base64"].is_null()) {
            if (!body["audio_wav_base64"].is_string())
                return fail(400, "'audio_wav_base64' must be a base64 string");
            try {
                audio = decode_wav_bytes(base64_decode(body["audio_wav_base64"].get<std::string>()));
            } catch (const std::exception& e) {
                return fail(400, std::string("bad audio payload: ") + e.what());
            }
        }
        if (bundle.kind == ModelKind::Fusion && !audio)
            return fail(422, "audio required for a fusion model");

        try {
            Prediction pred = predict(bundle, body["transcript"].get<std::string>(), audio);
            ordered_json scores = ordered_json::object();
            for (size_t k = 0; k < pred.scores.size(); ++k)
                scores[bundle.registry.at(static_cast<int>(k)).code] = pred.scores[k];
            ordered_json reply{{"dialect", pred.label.name},
                               {"code", pred.label.code},
                               {"scores", std::move(scores)}};
            res.set_content(reply.dump(), "application/json");
        } catch (const std::exception&) {
            fail(500, "internal error");
        }
    });
}

void run_server(const ModelBundle& bundle, const std::string& host, int port) {
    httplib::Server server;
    setup_routes(server, bundle);
    if (!server.listen(host, port))
        throw std::runtime_error("serve: cannot listen on " + host + ":" + std::to_string(port));
}

} // namespace murreid
