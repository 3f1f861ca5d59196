#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "trendlab/common.hpp"
#include "trendlab/csvio.hpp"
#include "trendlab/trend.hpp"

namespace trendlab {

/// JSON sidecar carrying everything needed to reinterpret a serialized panel
/// (grid, lag, construction mode, clip, per-asset normalization, day unit).
inline nlohmann::json panel_metadata(const Panel& panel) {
    nlohmann::json meta;
    meta["frequency"] = to_string(panel.frequency);
    meta["mode"] = to_string(panel.mode);
    meta["horizons"] = panel.horizons;
    meta["k_indices"] = panel.k_indices;
    meta["lag"] = panel.lag;
    meta["clip_phi"] = panel.clip_phi;
    meta["warmup_multiplier"] = panel.warmup_multiplier;
    meta["intervals_per_day"] = panel.intervals_per_day;
    meta["clip_applied_at"] = "emission";
    meta["rows"] = panel.rows();
    nlohmann::json assets = nlohmann::json::array();
    for (const auto& a : panel.assets) {
        assets.push_back({{"id", a.asset_id},
                          {"mu", a.mu},
                          {"sigma", a.sigma},
                          {"vol_mode", to_string(a.vol_mode)}});
    }
    meta["assets"] = assets;
    return meta;
}

inline void write_panel_meta(const std::string& path, const Panel& panel) {
    auto out = open_output(path);
    out << panel_metadata(panel).dump(2) << '\n';
}

/// Loads a panel CSV and, when present, its JSON sidecar (path + ".meta.json"
/// or an explicit meta path). Without a sidecar the frequency must be given
/// and defaults are assumed for the rest.
inline Panel load_panel_csv(const std::string& csv_path, const std::string& meta_path = "",
                            Frequency fallback_frequency = Frequency::daily) {
    Panel panel;
    bool have_meta = false;
    std::string mpath = meta_path.empty() ? csv_path + ".meta.json" : meta_path;
    {
        std::ifstream mf(mpath);
        if (mf) {
            nlohmann::json meta = nlohmann::json::parse(mf);
            panel.frequency = frequency_from_string(meta.at("frequency").get<std::string>());
            panel.mode = meta.at("mode").get<std::string>() == "day-by-day"
                             ? PanelMode::day_by_day
                             : PanelMode::continuous;
            panel.lag = meta.at("lag").get<int>();
            panel.clip_phi = meta.at("clip_phi").get<double>();
            panel.warmup_multiplier = meta.at("warmup_multiplier").get<double>();
            panel.intervals_per_day = meta.at("intervals_per_day").get<std::int64_t>();
            panel.horizons = meta.at("horizons").get<std::vector<int>>();
            panel.k_indices = meta.at("k_indices").get<std::vector<int>>();
            for (const auto& a : meta.at("assets")) {
                PanelAssetInfo info;
                info.asset_id = a.at("id").get<std::string>();
                info.mu = a.at("mu").get<double>();
                info.sigma = a.at("sigma").get<double>();
                info.vol_mode = a.at("vol_mode").get<std::string>() == "ewma"
                                    ? VolMode::ewma
                                    : VolMode::full_sample;
                panel.assets.push_back(info);
            }
            have_meta = true;
        }
    }
    if (!have_meta) {
        panel.frequency = fallback_frequency;
        panel.intervals_per_day =
            panel.frequency == Frequency::minute ? static_cast<std::int64_t>(kMinutesPerTradingDay)
                                                 : 1;
    }

    LineReader reader(csv_path);
    std::string line;
    if (!reader.next(line)) throw ParseError(csv_path + ": empty panel file");
    auto header = split(line, ',');
    if (header.size() < 4 || header.front() != "timestamp" || header[1] != "asset" ||
        header.back() != "response")
        throw ParseError(csv_path + ": expected header timestamp,asset,phi_k...,response");
    std::size_t K = header.size() - 3;
    panel.phi.assign(K, {});
    if (!have_meta) {
        panel.horizons.assign(K, 0);
        panel.k_indices.assign(K, 0);
        auto range = grid_k_range(panel.frequency);
        for (std::size_t k = 0; k < K; ++k) {
            const std::string& h = header[2 + k];
            auto pos = h.rfind('k');
            int kk = pos == std::string::npos
                         ? static_cast<int>(k + 1)
                         : static_cast<int>(parse_int(h.substr(pos + 1), csv_path));
            panel.k_indices[k] = kk;
            // k = 0 marks aggregated/stacked columns with no grid horizon
            panel.horizons[k] =
                (kk >= range[0] && kk <= range[1]) ? grid_horizon(panel.frequency, kk) : 0;
        }
    } else if (panel.horizons.size() != K) {
        throw ParseError(csv_path + ": sidecar horizon count does not match CSV columns");
    }

    std::map<std::string, std::uint32_t> asset_ids;
    for (std::size_t i = 0; i < panel.assets.size(); ++i)
        asset_ids[panel.assets[i].asset_id] = static_cast<std::uint32_t>(i);

    while (reader.next(line)) {
        if (trim(line).empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != header.size())
            throw ParseError(reader.where() + ": wrong field count");
        panel.timestamps.push_back(parse_int(fields[0], reader.where()));
        auto it = asset_ids.find(fields[1]);
        std::uint32_t idx;
        if (it == asset_ids.end()) {
            if (have_meta)
                throw ParseError(reader.where() + ": asset '" + fields[1] + "' not in sidecar");
            idx = static_cast<std::uint32_t>(panel.assets.size());
            asset_ids[fields[1]] = idx;
            panel.assets.push_back({fields[1], 0.0, 1.0, VolMode::full_sample});
        } else {
            idx = it->second;
        }
        panel.asset_index.push_back(idx);
        for (std::size_t k = 0; k < K; ++k)
            panel.phi[k].push_back(parse_double(fields[2 + k], reader.where()));
        panel.response.push_back(parse_double(fields.back(), reader.where()));
    }
    if (panel.rows() == 0) throw DataError(csv_path + ": no panel rows");
    return panel;
}

}  // namespace trendlab
