#include <doctest.h>

#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "murreid/service.hpp"
#include "murreid/synth.hpp"
#include "test_util.hpp"

using namespace murreid;
using nlohmann::json;
using testutil::TempDir;

TEST_CASE("base64 round-trips and rejects garbage") {
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("fo") == "Zm8=");
    CHECK(base64_encode("foo") == "Zm9v");
    CHECK(base64_decode("Zm9vYmFy") == "foobar");

    SplitMix64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::string bytes;
        const size_t n = rng.below(200);
        for (size_t i = 0; i < n; ++i) bytes += static_cast<char>(rng.below(256));
        CHECK(base64_decode(base64_encode(bytes)) == bytes);
    }
    CHECK_THROWS_AS(base64_decode("not*valid"), std::invalid_argument);
}

namespace {

struct LiveServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    explicit LiveServer(const ModelBundle& bundle) {
        setup_routes(server, bundle);
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~LiveServer() {
        server.stop();
        thread.join();
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("HTTP service contract") {
    TempDir dir("serve");
    SynthConfig sc;
    sc.n_classes = 2;
    sc.utterances_per_class = 6;
    sc.placement = MarkerPlacement::Both;
    sc.duration_min_s = 0.5;
    sc.duration_max_s = 0.7;
    sc.seed = 11;
    SynthResult synth = generate(sc, dir.path().string());
    for (Utterance& u : synth.utterances)
        u.audio_path = (dir.path() / u.audio_path).string();

    nn::TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 4;

    SUBCASE("text bundle: health, classify, malformed JSON") {
        auto [model, report] = train_text_only(synth.utterances, {}, cfg);
        ModelBundle bundle = bundle_from(std::move(model));
        LiveServer live(bundle);
        httplib::Client client("127.0.0.1", live.port);

        auto health = client.Get("/healthz");
        REQUIRE(health);
        CHECK(health->status == 200);
        CHECK(health->body == "ok");

        auto ok = client.Post("/classify", R"({"transcript":"murre_1 talo"})", "application/json");
        REQUIRE(ok);
        CHECK(ok->status == 200);
        json body = json::parse(ok->body);
        CHECK(body.contains("dialect"));
        CHECK(body.contains("code"));
        REQUIRE(body.at("scores").size() == 23);
        double sum = 0.0;
        for (const auto& [code, score] : body.at("scores").items()) sum += score.get<double>();
        CHECK(std::abs(sum - 1.0) <= 1e-9);

        auto bad = client.Post("/classify", "{nope", "application/json");
        REQUIRE(bad);
        CHECK(bad->status == 400);
        CHECK(json::parse(bad->body).at("error").get<std::string>().find("JSON") !=
              std::string::npos);

        auto missing = client.Post("/classify", R"({"audio_wav_base64":"AAA="})",
                                   "application/json");
        REQUIRE(missing);
        CHECK(missing->status == 400);

        SUBCASE("serve and predict agree bit for bit") {
            Prediction direct = predict(bundle, "murre_1 talo");
            const std::string& code0 = bundle.registry.at(0).code;
            CHECK(body.at("scores").at(code0).get<double>() == direct.scores[0]);
            CHECK(body.at("code").get<std::string>() == direct.label.code);
            for (size_t k = 0; k < direct.scores.size(); ++k)
                CHECK(body.at("scores").at(bundle.registry.at(static_cast<int>(k)).code)
                          .get<double>() == direct.scores[k]);
        }
    }

    SUBCASE("fusion bundle: 422 without audio, 200 with audio") {
        auto [model, report] = train_fusion(synth.utterances, {}, cfg);
        ModelBundle bundle = bundle_from(std::move(model));
        LiveServer live(bundle);
        httplib::Client client("127.0.0.1", live.port);

        auto no_audio = client.Post("/classify", R"({"transcript":"moi"})", "application/json");
        REQUIRE(no_audio);
        CHECK(no_audio->status == 422);

        const std::string wav_b64 = base64_encode(slurp(synth.utterances[0].audio_path));
        json req{{"transcript", synth.utterances[0].transcript_dialectal},
                 {"audio_wav_base64", wav_b64}};
        auto ok = client.Post("/classify", req.dump(), "application/json");
        REQUIRE(ok);
        CHECK(ok->status == 200);
        json body = json::parse(ok->body);
        double sum = 0.0;
        for (const auto& [code, score] : body.at("scores").items()) sum += score.get<double>();
        CHECK(std::abs(sum - 1.0) <= 1e-9);

        auto bad_wav = client.Post(
            "/classify", R"({"transcript":"moi","audio_wav_base64":"bm90IGEgd2F2"})",
            "application/json");
        REQUIRE(bad_wav);
        CHECK(bad_wav->status == 400);
    }
}
