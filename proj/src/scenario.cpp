#include "lbtsim/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lbtsim {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::string& where,
                         const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field \"") + key + "\": " + e.what());
  }
}

DriverCall parse_call(const std::string& s, const std::string& where) {
  for (int i = 0; i < kDriverCallCount; ++i) {
    const auto c = static_cast<DriverCall>(i);
    if (s == to_string(c)) return c;
  }
  throw ConfigError(where + ": unknown driver call \"" + s + "\"");
}

PowerState parse_state(const std::string& s, const std::string& where) {
  for (int i = 0; i < kPowerStateCount; ++i) {
    const auto st = static_cast<PowerState>(i);
    if (s == to_string(st)) return st;
  }
  throw ConfigError(where + ": unknown power state \"" + s + "\"");
}

EnergyParams parse_energy_obj(const json& obj, const std::string& where) {
  reject_unknown_keys(obj, where,
                      {"supply_mv", "i_rx_ua", "i_lpl_ua", "i_tx_ua", "i_idle_ua",
                       "i_sleep_ua", "lpl_model", "e_tran_pj", "transitions"});
  EnergyParams p;
  p.supply_mv = get_or<std::int64_t>(obj, "supply_mv", p.supply_mv);
  p.i_rx_ua = get_or<std::int64_t>(obj, "i_rx_ua", p.i_rx_ua);
  p.i_lpl_ua = get_or<std::int64_t>(obj, "i_lpl_ua", p.i_lpl_ua);
  p.i_tx_ua = get_or<std::int64_t>(obj, "i_tx_ua", p.i_tx_ua);
  p.i_idle_ua = get_or<std::int64_t>(obj, "i_idle_ua", p.i_idle_ua);
  p.i_sleep_ua = get_or<std::int64_t>(obj, "i_sleep_ua", p.i_sleep_ua);
  const std::string lpl = get_or<std::string>(obj, "lpl_model", "averaged");
  if (lpl == "averaged")
    p.alternating_lpl = false;
  else if (lpl == "alternating")
    p.alternating_lpl = true;
  else
    throw ConfigError(where + ".lpl_model: expected \"averaged\" or \"alternating\"");
  if (obj.contains("e_tran_pj")) {
    const auto& et = obj.at("e_tran_pj");
    if (!et.is_object()) throw ConfigError(where + ".e_tran_pj: expected an object");
    for (auto it = et.begin(); it != et.end(); ++it) {
      const DriverCall c = parse_call(it.key(), where + ".e_tran_pj");
      const std::int64_t v = it.value().get<std::int64_t>();
      if (v < 0) throw ConfigError(where + ".e_tran_pj: energies must be >= 0");
      p.e_tran_pj[c] = v;
    }
  }
  if (obj.contains("transitions")) {
    const auto& arr = obj.at("transitions");
    if (!arr.is_array()) throw ConfigError(where + ".transitions: expected an array");
    for (const auto& t : arr) {
      reject_unknown_keys(t, where + ".transitions[]", {"from", "call", "to", "e_tran_pj"});
      EnergyParams::CustomEdge e;
      e.from = parse_state(t.at("from").get<std::string>(), where + ".transitions[]");
      e.call = parse_call(t.at("call").get<std::string>(), where + ".transitions[]");
      e.to = parse_state(t.at("to").get<std::string>(), where + ".transitions[]");
      e.e_tran_pj = get_or<std::int64_t>(t, "e_tran_pj", 0);
      p.custom_edges.push_back(e);
    }
  }
  return p;
}

RadioParams parse_radio_obj(const json& obj, const std::string& where) {
  reject_unknown_keys(obj, where,
                      {"bit_rate", "sniff_on_us", "sleep_us", "preamble_bytes",
                       "sync_bytes", "header_bytes", "crc_bytes", "extended_preamble_us"});
  RadioParams r;
  r.bit_rate = get_or<std::int64_t>(obj, "bit_rate", r.bit_rate);
  r.sniff_on_us = get_or<Duration>(obj, "sniff_on_us", r.sniff_on_us);
  r.sleep_us = get_or<Duration>(obj, "sleep_us", r.sleep_us);
  r.preamble_bytes = get_or<int>(obj, "preamble_bytes", r.preamble_bytes);
  r.sync_bytes = get_or<int>(obj, "sync_bytes", r.sync_bytes);
  r.header_bytes = get_or<int>(obj, "header_bytes", r.header_bytes);
  r.crc_bytes = get_or<int>(obj, "crc_bytes", r.crc_bytes);
  r.extended_preamble_us =
      get_or<Duration>(obj, "extended_preamble_us", r.extended_preamble_us);
  return r;
}

MacMode parse_mode(const std::string& s, const std::string& where) {
  if (s == "lbt") return MacMode::Lbt;
  if (s == "aloha") return MacMode::Aloha;
  throw ConfigError(where + ": expected \"lbt\" or \"aloha\"");
}

TpsPolicy parse_policy(const std::string& s, const std::string& where) {
  if (s == "redraw") return TpsPolicy::RedrawPerRound;
  if (s == "retain") return TpsPolicy::RetainPerPacket;
  throw ConfigError(where + ": expected \"redraw\" or \"retain\"");
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError(origin + ": top level must be an object");

  const std::string kind = get_or<std::string>(root, "kind", "warehouse");
  Scenario sc;
  if (kind == "warehouse") {
    sc.kind = Scenario::Kind::Warehouse;
    reject_unknown_keys(root, origin,
                        {"kind", "nodes", "n_active", "active_set", "product_id",
                         "quantity_each", "polls", "window_us", "mode", "tps_policy",
                         "collect_in_band", "payloads", "radio", "mac", "unicast",
                         "energy"});
    auto& w = sc.warehouse;
    w.n_nodes = get_or<int>(root, "nodes", w.n_nodes);
    w.n_active = get_or<int>(root, "n_active", w.n_active);
    if (root.contains("active_set"))
      w.active_set = root.at("active_set").get<std::vector<int>>();
    w.product_id = get_or<std::uint16_t>(root, "product_id", w.product_id);
    w.quantity_each = get_or<std::uint16_t>(root, "quantity_each", w.quantity_each);
    if (root.contains("polls")) {
      const auto& p = root.at("polls");
      reject_unknown_keys(p, origin + ".polls", {"count", "first_offset_us", "spacing_us"});
      w.poll_count = get_or<int>(p, "count", w.poll_count);
      w.poll_first_offset_us = get_or<Duration>(p, "first_offset_us", w.poll_first_offset_us);
      w.poll_spacing_us = get_or<Duration>(p, "spacing_us", w.poll_spacing_us);
    }
    w.window_us = get_or<Duration>(root, "window_us", w.window_us);
    if (root.contains("mode"))
      w.mac.mode = parse_mode(root.at("mode").get<std::string>(), origin + ".mode");
    if (root.contains("tps_policy"))
      w.mac.tps_policy =
          parse_policy(root.at("tps_policy").get<std::string>(), origin + ".tps_policy");
    w.collect_in_band = get_or<bool>(root, "collect_in_band", w.collect_in_band);
    if (root.contains("payloads")) {
      const auto& p = root.at("payloads");
      reject_unknown_keys(p, origin + ".payloads", {"poll", "reply", "start_stop", "unicast"});
      w.payloads.poll = get_or<std::uint16_t>(p, "poll", w.payloads.poll);
      w.payloads.reply = get_or<std::uint16_t>(p, "reply", w.payloads.reply);
      w.payloads.start_stop = get_or<std::uint16_t>(p, "start_stop", w.payloads.start_stop);
      w.payloads.unicast = get_or<std::uint16_t>(p, "unicast", w.payloads.unicast);
    }
    if (root.contains("radio")) w.radio = parse_radio_obj(root.at("radio"), origin + ".radio");
    if (root.contains("mac")) {
      const auto& m = root.at("mac");
      reject_unknown_keys(m, origin + ".mac",
                          {"t_fixed_us", "t_ps_max_us", "pre_backoff_max_us"});
      w.mac.t_fixed_us = get_or<Duration>(m, "t_fixed_us", w.mac.t_fixed_us);
      w.mac.t_ps_max_us = get_or<Duration>(m, "t_ps_max_us", w.mac.t_ps_max_us);
      w.mac.pre_backoff_max_us =
          get_or<Duration>(m, "pre_backoff_max_us", w.mac.pre_backoff_max_us);
    }
    if (root.contains("unicast")) {
      const auto& u = root.at("unicast");
      reject_unknown_keys(u, origin + ".unicast", {"timeout_us", "retries"});
      w.unicast_timeout_us = get_or<Duration>(u, "timeout_us", w.unicast_timeout_us);
      w.unicast_retries = get_or<int>(u, "retries", w.unicast_retries);
    }
    if (root.contains("energy"))
      w.energy = parse_energy_obj(root.at("energy"), origin + ".energy");
    try {
      w.validate();
    } catch (const std::exception& e) {
      throw ConfigError(origin + ": " + e.what());
    }
  } else if (kind == "poisson") {
    sc.kind = Scenario::Kind::Poisson;
    reject_unknown_keys(root, origin,
                        {"kind", "nodes", "offered_load", "payload", "preamble",
                         "duration_us", "radio", "energy"});
    auto& p = sc.poisson;
    p.n_nodes = get_or<int>(root, "nodes", p.n_nodes);
    p.offered_load = get_or<double>(root, "offered_load", p.offered_load);
    p.payload = get_or<std::uint16_t>(root, "payload", p.payload);
    const std::string pre = get_or<std::string>(root, "preamble", "normal");
    if (pre == "normal")
      p.preamble = PreambleMode::Normal;
    else if (pre == "extended")
      p.preamble = PreambleMode::Extended;
    else
      throw ConfigError(origin + ".preamble: expected \"normal\" or \"extended\"");
    p.duration_us = get_or<Duration>(root, "duration_us", p.duration_us);
    if (root.contains("radio")) p.radio = parse_radio_obj(root.at("radio"), origin + ".radio");
    if (root.contains("energy"))
      p.energy = parse_energy_obj(root.at("energy"), origin + ".energy");
    try {
      p.radio.validate();
    } catch (const std::exception& e) {
      throw ConfigError(origin + ": " + e.what());
    }
  } else {
    throw ConfigError(origin + ".kind: expected \"warehouse\" or \"poisson\"");
  }
  return sc;
}

namespace {
std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
}  // namespace

Scenario load_scenario_file(const std::string& path) {
  return parse_scenario(read_file(path), path);
}

EnergyParams parse_energy_params(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError(origin + ": top level must be an object");
  return parse_energy_obj(root, origin);
}

EnergyParams load_energy_params_file(const std::string& path) {
  return parse_energy_params(read_file(path), path);
}

}  // namespace lbtsim
