#include "lbtsim/energy.hpp"

#include <stdexcept>

namespace lbtsim {

const char* to_string(PowerState s) {
  switch (s) {
    case PowerState::SleepLpl: return "SLEEP_LPL";
    case PowerState::Rx: return "RX";
    case PowerState::Tx: return "TX";
    case PowerState::Idle: return "IDLE";
  }
  return "?";
}

const char* to_string(DriverCall c) {
  switch (c) {
    case DriverCall::Send: return "send";
    case DriverCall::Listen: return "listen";
    case DriverCall::LowPowerListen: return "low-power-listen";
    case DriverCall::PacketReceivedIrq: return "packet-received-irq";
    case DriverCall::TxDoneIrq: return "tx-done-irq";
    case DriverCall::SniffStart: return "sniff-start";
    case DriverCall::SniffEnd: return "sniff-end";
  }
  return "?";
}

std::int64_t EnergyParams::power_uw(std::int64_t current_ua) const {
  const std::int64_t nw = supply_mv * current_ua;
  if (nw % 1'000 != 0)
    throw std::invalid_argument(
        "energy: supply_mv * current_ua must be whole microwatts (got " +
        std::to_string(nw) + " nW)");
  return nw / 1'000;
}

void EnergyDfaModel::set_edge(PowerState from, DriverCall call, PowerState to,
                              std::int64_t e_tran_pj) {
  auto& e = table[static_cast<int>(from)][static_cast<int>(call)];
  e.defined = true;
  e.to = to;
  e.e_tran_pj = e_tran_pj;
}

const EnergyDfaModel::Edge& EnergyDfaModel::edge(PowerState from, DriverCall call) const {
  return table[static_cast<int>(from)][static_cast<int>(call)];
}

EnergyDfaModel EnergyDfaModel::from_params(const EnergyParams& p) {
  EnergyDfaModel m;
  m.state_power_uw[static_cast<int>(PowerState::SleepLpl)] =
      p.power_uw(p.alternating_lpl ? p.i_sleep_ua : p.i_lpl_ua);
  m.state_power_uw[static_cast<int>(PowerState::Rx)] = p.power_uw(p.i_rx_ua);
  m.state_power_uw[static_cast<int>(PowerState::Tx)] = p.power_uw(p.i_tx_ua);
  m.state_power_uw[static_cast<int>(PowerState::Idle)] = p.power_uw(p.i_idle_ua);

  auto et = [&p](DriverCall c) {
    auto it = p.e_tran_pj.find(c);
    return it == p.e_tran_pj.end() ? 0 : it->second;
  };

  m.set_edge(PowerState::Idle, DriverCall::Listen, PowerState::Rx, et(DriverCall::Listen));
  m.set_edge(PowerState::SleepLpl, DriverCall::Listen, PowerState::Rx, et(DriverCall::Listen));
  m.set_edge(PowerState::Rx, DriverCall::Send, PowerState::Tx, et(DriverCall::Send));
  m.set_edge(PowerState::Idle, DriverCall::Send, PowerState::Tx, et(DriverCall::Send));
  m.set_edge(PowerState::SleepLpl, DriverCall::Send, PowerState::Tx, et(DriverCall::Send));
  m.set_edge(PowerState::Rx, DriverCall::LowPowerListen, PowerState::SleepLpl,
             et(DriverCall::LowPowerListen));
  m.set_edge(PowerState::Idle, DriverCall::LowPowerListen, PowerState::SleepLpl,
             et(DriverCall::LowPowerListen));
  m.set_edge(PowerState::Rx, DriverCall::PacketReceivedIrq, PowerState::Rx,
             et(DriverCall::PacketReceivedIrq));
  m.set_edge(PowerState::Tx, DriverCall::TxDoneIrq, PowerState::Idle,
             et(DriverCall::TxDoneIrq));
  // Sniff edges only fire in the alternating refinement.
  m.set_edge(PowerState::SleepLpl, DriverCall::SniffStart, PowerState::Rx,
             et(DriverCall::SniffStart));
  m.set_edge(PowerState::Rx, DriverCall::SniffEnd, PowerState::SleepLpl,
             et(DriverCall::SniffEnd));
  for (const auto& e : p.custom_edges) m.set_edge(e.from, e.call, e.to, e.e_tran_pj);
  return m;
}

std::int64_t EnergyLedger::on_transition(DriverCall call, SimTime now) {
  const auto& e = model_->edge(state_, call);
  if (!e.defined)
    throw std::logic_error(std::string("energy DFA: undefined transition (") +
                           to_string(state_) + ", " + to_string(call) + ")");
  accumulated_pj_ +=
      model_->state_power_uw[static_cast<int>(state_)] * (now - entry_) + e.e_tran_pj;
  state_ = e.to;
  entry_ = now;
  return accumulated_pj_;
}

void EnergyLedger::reset(SimTime now) {
  accumulated_pj_ = 0;
  entry_ = now;
}

std::int64_t EnergyLedger::freeze(SimTime now) {
  accumulated_pj_ += model_->state_power_uw[static_cast<int>(state_)] * (now - entry_);
  entry_ = now;
  return accumulated_pj_;
}

ReplayResult replay_energy(const std::vector<MacLogRow>& rows, int node,
                           const EnergyDfaModel& model, SimTime end_time) {
  // Same fold as the online ledger but reconstructed from the log alone.
  PowerState state = PowerState::Idle;
  SimTime entry = 0;
  std::int64_t acc = 0;
  ReplayResult out;
  for (const auto& r : rows) {
    if (r.node != node) continue;
    switch (r.type) {
      case MacLogRow::Type::Driver: {
        const auto call = static_cast<DriverCall>(r.a);
        const auto& e = model.edge(state, call);
        if (!e.defined)
          throw std::logic_error("replay_energy: undefined transition in log");
        acc += model.state_power_uw[static_cast<int>(state)] * (r.time - entry) + e.e_tran_pj;
        state = e.to;
        entry = r.time;
        break;
      }
      case MacLogRow::Type::StatsReset:
        acc = 0;
        entry = r.time;
        break;
      case MacLogRow::Type::StatsFreeze:
        acc += model.state_power_uw[static_cast<int>(state)] * (r.time - entry);
        entry = r.time;
        out.frozen_pj = acc;
        out.saw_freeze = true;
        break;
      default:
        break;
    }
  }
  acc += model.state_power_uw[static_cast<int>(state)] * (end_time - entry);
  out.final_pj = acc;
  return out;
}

}  // namespace lbtsim
