#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wiresens/channel.hpp"
#include "wiresens/config.hpp"
#include "wiresens/error.hpp"
#include "wiresens/firmware.hpp"
#include "wiresens/optimizer.hpp"
#include "wiresens/packet.hpp"
#include "wiresens/power.hpp"
#include "wiresens/receiver.hpp"
#include "wiresens/recording.hpp"
#include "wiresens/scenario.hpp"

namespace py = pybind11;
using namespace wiresens;

namespace {

py::bytes to_bytes(const Bytes& b) { return py::bytes(reinterpret_cast<const char*>(b.data()), b.size()); }

Bytes from_bytes(const py::bytes& b) {
    const std::string_view s = b;
    return Bytes(s.begin(), s.end());
}

}  // namespace

PYBIND11_MODULE(_wiresens, m) {
    m.doc() = "Native core of the wiresens tactile sensing toolkit";

    // Translators run newest first, so subclasses are registered after the base.
    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ParseError>(m, "ParseError", base);
    py::register_exception<ValidationError>(m, "ValidationError", base);
    py::register_exception<CodecError>(m, "CodecError", base);
    py::register_exception<RecordingError>(m, "RecordingError", base);
    py::register_exception<IoError>(m, "IoError", base);
    py::register_exception<CalibrationError>(m, "CalibrationError", base);

    py::class_<Frame>(m, "Frame")
        .def(py::init<>())
        .def(py::init([](int deviceId, std::uint32_t packetId, std::uint64_t timestampUs, int rows, int cols,
                         std::vector<std::uint16_t> values, bool reconstructed) {
                 return Frame{static_cast<std::uint8_t>(deviceId), packetId, timestampUs,
                              static_cast<std::uint8_t>(rows), static_cast<std::uint8_t>(cols), std::move(values),
                              reconstructed};
             }),
             py::arg("device_id"), py::arg("packet_id"), py::arg("timestamp_us"), py::arg("rows"), py::arg("cols"),
             py::arg("values"), py::arg("reconstructed") = false)
        .def_readwrite("device_id", &Frame::deviceId)
        .def_readwrite("packet_id", &Frame::packetId)
        .def_readwrite("timestamp_us", &Frame::timestampUs)
        .def_readwrite("rows", &Frame::rows)
        .def_readwrite("cols", &Frame::cols)
        .def_readwrite("values", &Frame::values)
        .def_readwrite("reconstructed", &Frame::reconstructed)
        .def("__eq__", [](const Frame& a, const Frame& b) { return a == b; })
        .def("__repr__", [](const Frame& f) {
            return "<Frame device=" + std::to_string(f.deviceId) + " packet=" + std::to_string(f.packetId) + " " +
                   std::to_string(f.rows) + "x" + std::to_string(f.cols) + (f.reconstructed ? " reconstructed>" : ">");
        });

    py::class_<CalibrationResult>(m, "CalibrationResult")
        .def_readonly("v_min", &CalibrationResult::vMin)
        .def_readonly("r_pot_solved", &CalibrationResult::rPotSolved)
        .def_readonly("r_pot_applied", &CalibrationResult::rPotApplied)
        .def_readonly("wiper_step", &CalibrationResult::wiperStep);

    py::class_<ParamScore>(m, "ParamScore").def_readonly("E", &ParamScore::E).def_readonly("r", &ParamScore::r);

    m.def("encode_packet", [](const Frame& f, int adcBits) { return to_bytes(encode_packet(f, adcBits)); },
          py::arg("frame"), py::arg("adc_bits") = 12);
    m.def("decode_packet", [](const py::bytes& b) { return decode_packet(from_bytes(b)); }, py::arg("data"));
    m.def("encoded_size", &encoded_size, py::arg("rows"), py::arg("cols"));

    m.def("predict_frame", &predict_frame, py::arg("prev"), py::arg("last"), py::arg("p"), py::arg("adc_bits") = 12);
    m.def("should_send", &should_send, py::arg("actual"), py::arg("predicted"), py::arg("d"));
    m.def("solve_calibration", &solve_calibration, py::arg("v_min"), py::arg("v_ref"));

    m.def("_parse_config", [](const std::string& text) {
        json out = json::array();
        for (const auto& c : parse_config(text)) out.push_back(to_json(c));
        return out.dump();
    });

    m.def("write_recording",
          [](const std::string& path, int deviceId, int rows, int cols, int adcBits, const std::vector<Frame>& frames) {
              write_recording(path,
                              {static_cast<std::uint8_t>(deviceId), static_cast<std::uint8_t>(rows),
                               static_cast<std::uint8_t>(cols), static_cast<std::uint8_t>(adcBits)},
                              std::span<const Frame>(frames));
          },
          py::arg("path"), py::arg("device_id"), py::arg("rows"), py::arg("cols"), py::arg("adc_bits"),
          py::arg("frames"));
    m.def("read_recording", [](const std::string& path) { return read_recording(path).frames; }, py::arg("path"));
    m.def("export_csv", [](const std::string& path) { return export_csv(read_recording(path)); }, py::arg("path"));

    m.def("evaluate_params",
          [](const std::vector<Frame>& frames, int p, int d, int adcBits) {
              return evaluate_params(frames, p, d, adcBits);
          },
          py::arg("frames"), py::arg("p"), py::arg("d"), py::arg("adc_bits") = 12);
    m.def("_grid_search",
          [](const std::vector<Frame>& frames, const std::vector<int>& ps, const std::vector<int>& ds, double alpha,
             int adcBits, unsigned threads) {
              OptimizationSurface s;
              {
                  py::gil_scoped_release release;
                  s = grid_search(frames, ps, ds, alpha, adcBits, threads);
              }
              return surface_to_json(s);
          },
          py::arg("frames"), py::arg("p_values"), py::arg("d_values"), py::arg("alpha") = 0.5,
          py::arg("adc_bits") = 12, py::arg("threads") = 0);

    m.def("_simulate", [](const std::string& scenarioPath, const std::string& outDir) {
        py::gil_scoped_release release;
        const ScenarioSpec spec = load_scenario(scenarioPath);
        return stats_json(simulate(spec, outDir.empty() ? spec.outputs : outDir)).dump();
    });

    m.def("_power_table", [](const std::string& protocol, const std::vector<double>& tAs) {
        const PowerProfile p = default_power_profile(protocol_from_string(protocol));
        json rows = json::array();
        for (const auto& r : lifetime_table(p, tAs))
            rows.push_back({{"tA", r.tA}, {"currentMa", r.currentMa}, {"hours", r.hours}, {"extensionPct", r.extensionPct}});
        return json{{"profile", to_json(p)}, {"rows", rows}}.dump();
    });
}
