#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wplab/errors.hpp"
#include "wplab/util.hpp"
#include "wplab/wavepacket.hpp"

namespace wplab {

using json = nlohmann::json;

// Wavepacket as JSON: grid descriptor plus interleaved re/im amplitudes.
inline json wavepacket_to_json(const Wavepacket& wp) {
    json j;
    j["grid"] = {{"n_points", wp.grid.n_points},
                 {"spacing", wp.grid.spacing},
                 {"origin", wp.grid.origin}};
    j["time"] = wp.time;
    j["mass"] = wp.mass;
    j["species"] = wp.species;
    j["quanta"] = wp.quanta;
    j["coalesced_from"] = wp.coalesced_from;
    std::vector<double> interleaved;
    interleaved.reserve(wp.amplitudes.size() * 2);
    for (const auto& a : wp.amplitudes) {
        interleaved.push_back(a.real());
        interleaved.push_back(a.imag());
    }
    j["amplitudes"] = std::move(interleaved);
    return j;
}

inline Wavepacket wavepacket_from_json(const json& j) {
    try {
        const auto& jg = j.at("grid");
        const Grid1D grid(jg.at("n_points").get<int>(), jg.at("spacing").get<double>(),
                          jg.at("origin").get<double>());
        Wavepacket wp;
        wp.grid = grid;
        wp.time = j.at("time").get<double>();
        wp.mass = j.at("mass").get<double>();
        wp.species = j.at("species").get<std::string>();
        wp.quanta = j.at("quanta").get<int>();
        wp.coalesced_from = j.value("coalesced_from", 1);
        require(wp.quanta >= 1, Errc::invalid_argument, "quanta must be >= 1");
        const auto amps = j.at("amplitudes").get<std::vector<double>>();
        require(amps.size() == 2 * static_cast<std::size_t>(grid.n_points),
                Errc::invalid_argument, "amplitude array must hold 2 * n_points doubles");
        wp.amplitudes.resize(static_cast<std::size_t>(grid.n_points));
        for (int i = 0; i < grid.n_points; ++i)
            wp.amplitudes[static_cast<std::size_t>(i)] =
                cdouble(amps[static_cast<std::size_t>(2 * i)],
                        amps[static_cast<std::size_t>(2 * i + 1)]);
        check_normalized(wp);
        return wp;
    } catch (const json::exception& e) {
        raise(Errc::invalid_argument, std::string("bad wavepacket json: ") + e.what());
    }
}

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {
        for (std::size_t i = 0; i < header_.size(); ++i) {
            if (i) out_ += ',';
            out_ += header_[i];
        }
        out_ += '\n';
    }

    void row(const std::vector<std::string>& cells) {
        require(cells.size() == header_.size(), Errc::invalid_argument,
                "csv row width does not match header");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ += ',';
            out_ += cells[i];
        }
        out_ += '\n';
    }

    const std::string& text() const { return out_; }

private:
    std::vector<std::string> header_;
    std::string out_;
};

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    require(f.good(), Errc::io_error, "cannot open " + path.string() + " for writing");
    f << content;
    f.flush();
    require(f.good(), Errc::io_error, "write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), Errc::io_error, "cannot open " + path.string());
    std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return content;
}

} // namespace wplab
