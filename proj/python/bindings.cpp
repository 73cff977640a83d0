#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <map>

#include "sdpmtd/error.hpp"
#include "sdpmtd/hmac.hpp"
#include "sdpmtd/report.hpp"
#include "sdpmtd/scenario.hpp"
#include "sdpmtd/spa.hpp"

namespace py = pybind11;
using namespace sdpmtd;

namespace {

std::vector<std::uint8_t> as_vec(const py::bytes& b) {
    std::string s = b;
    return {s.begin(), s.end()};
}

template <std::size_t N>
std::array<std::uint8_t, N> as_array(const py::bytes& b, const char* what) {
    auto v = as_vec(b);
    if (v.size() != N) throw py::value_error(std::string(what) + " must be " + std::to_string(N) + " bytes");
    std::array<std::uint8_t, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

template <typename C>
py::bytes to_bytes(const C& c) {
    return py::bytes(reinterpret_cast<const char*>(c.data()), c.size());
}

HostId host(const std::string& name) {
    auto id = HostId::from_name(name);
    if (!id) throw py::value_error("host name must be 1..16 bytes: '" + name + "'");
    return *id;
}

ScenarioConfig with_mode(ScenarioConfig cfg, const std::optional<std::string>& mode) {
    if (mode) {
        auto m = parse_mode(*mode);
        if (!m) throw py::value_error("mode must be sdp or baseline");
        cfg.mode = *m;
    }
    return cfg;
}

// Verifier state kept across calls: one credential store and one replay window.
class Verifier {
public:
    explicit Verifier(std::uint64_t freshness_ms) : window_(freshness_ms) {}

    void add_client(const std::string& name, const py::bytes& key) {
        Credential c;
        c.host_id = host(name);
        c.hmac_key = as_array<kHmacKeySize>(key, "key");
        store_.insert(c);
    }

    std::string verify(const py::bytes& packet, std::uint64_t now_ms) {
        auto bytes = as_vec(packet);
        auto r = verify_spa(std::span<const std::uint8_t>(bytes), store_, window_, now_ms);
        return r.accepted() ? "accept" : "reject:" + std::string(to_string(r.reason()));
    }

private:
    CredentialStore store_;
    ReplayWindow window_;
};

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "SDP + MTD simulator core";

    py::register_exception<Error>(m, "SdpmtdError", PyExc_RuntimeError);

    py::class_<CheckResult>(m, "CheckResult")
        .def_readonly("name", &CheckResult::name)
        .def_readonly("passed", &CheckResult::passed)
        .def_readonly("detail", &CheckResult::detail)
        .def_readonly("cites", &CheckResult::cites)
        .def("__repr__", [](const CheckResult& c) {
            return std::string(c.passed ? "PASS " : "FAIL ") + c.name + ": " + c.detail;
        });

    py::class_<Report>(m, "Report")
        .def_readonly("scenario", &Report::scenario)
        .def_property_readonly("mode", [](const Report& r) { return std::string(to_string(r.mode)); })
        .def_readonly("seed", &Report::seed)
        .def_readonly("checks", &Report::checks)
        .def_readonly("trace", &Report::trace)
        .def_property_readonly("passed", &Report::passed)
        .def("rows", &Report::rows)
        .def("metrics", [](const Report& r) {
            std::map<std::string, std::string> out;
            for (auto& [k, v] : r.rows()) out[k] = v;
            return out;
        })
        .def("value", &Report::value, py::arg("metric"))
        .def("csv", [](const Report& r) { return format_csv(r); });

    m.def(
        "run_file",
        [](const std::string& path, std::optional<std::uint64_t> seed, std::optional<std::string> mode) {
            return run(with_mode(load_scenario(path), mode), seed);
        },
        py::arg("path"), py::arg("seed") = py::none(), py::arg("mode") = py::none(),
        "Load a scenario file and run it with the built-in checks.");
    m.def(
        "run_text",
        [](const std::string& text, std::optional<std::uint64_t> seed, std::optional<std::string> mode) {
            return run(with_mode(parse_scenario(text), mode), seed);
        },
        py::arg("text"), py::arg("seed") = py::none(), py::arg("mode") = py::none());

    m.def(
        "hmac_sha256",
        [](const py::bytes& key, const py::bytes& msg) { return to_bytes(hmac_sha256(as_vec(key), as_vec(msg))); },
        py::arg("key"), py::arg("message"));

    m.def(
        "build_spa",
        [](const std::string& client, const py::bytes& key, const std::string& service, std::uint64_t ts_ms,
           const py::bytes& nonce) {
            SpaPacket p;
            p.client_id = host(client);
            p.timestamp_ms = ts_ms;
            p.nonce = as_array<16>(nonce, "nonce");
            p.requested_service_id = host(service);
            p.mac = hmac_sha256(as_array<kHmacKeySize>(key, "key"), p.signed_bytes());
            return to_bytes(p.serialize());
        },
        py::arg("client"), py::arg("key"), py::arg("service"), py::arg("ts_ms"), py::arg("nonce"),
        "Signed 89-byte SPA packet.");

    py::class_<Verifier>(m, "Verifier")
        .def(py::init<std::uint64_t>(), py::arg("freshness_ms") = kDefaultFreshnessMs)
        .def("add_client", &Verifier::add_client, py::arg("name"), py::arg("key"))
        .def("verify", &Verifier::verify, py::arg("packet"), py::arg("now_ms"));

    m.def(
        "fluid_mean_wait_ms",
        [](const std::vector<std::tuple<double, double, double>>& segments, double service_pps,
           const std::vector<double>& samples) {
            std::vector<ArrivalSegment> a;
            for (auto [s, e, r] : segments) a.push_back(ArrivalSegment{s, e, r});
            return fluid_mean_wait_ms(a, service_pps, samples);
        },
        py::arg("segments"), py::arg("service_pps"), py::arg("sample_times_ms"));
}
