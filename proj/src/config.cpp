#include "diode/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "diode/errors.hpp"

namespace diode {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

long long parse_int(const std::string& key, const std::string& value, int line) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line) + ": bad integer for " + key + ": '" +
                         value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value, int line) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line) + ": bad number for " + key + ": '" +
                         value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value, int line) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ParseError("line " + std::to_string(line) + ": bad boolean for " + key + ": '" + value +
                     "'");
}

// "AES/EAX/NoPadding" -> (AES, EAX)
std::pair<std::string, std::string> split_cipher(const std::string& key, const std::string& value,
                                                int line) {
    std::size_t a = value.find('/');
    std::size_t b = a == std::string::npos ? std::string::npos : value.find('/', a + 1);
    if (a == std::string::npos || b == std::string::npos)
        throw ParseError("line " + std::to_string(line) + ": bad cipher spec for " + key + ": '" +
                         value + "'");
    return {value.substr(0, a), value.substr(a + 1, b - a - 1)};
}

// The paper's property names, plus shorter aliases for every key the artifact
// adds on top.
const std::set<std::string> kKnownKeys = {
    "application.datadiode.cutter.size",
    "application.stream.cutter.redundancyFactor",
    "application.datadiode.udp.external.rate",
    "application.datadiode.black.udp.compress",
    "application.datadiode.red.cipher.provider",
    "application.datadiode.red.cipher.signature",
    "application.datadiode.red.cipher.asymmetrical.algorithm",
    "application.datadiode.red.cipher.asymmetrical.cipher",
    "application.datadiode.red.cipher.asymmetrical.keysize",
    "application.datadiode.red.cipher.symmetrical.algorithm",
    "application.datadiode.red.cipher.symmetrical.cipher",
    "application.datadiode.red.cipher.symmetrical.keysize",
    "diode.cutter.size",
    "diode.cutter.redundancy",
    "diode.cutter.shuffle.seed",
    "diode.udp.rate",
    "diode.udp.burst",
    "diode.udp.mtu",
    "diode.udp.compress",
    "diode.udp.listen.host",
    "diode.udp.listen.port",
    "diode.udp.target.host",
    "diode.udp.target.port",
    "diode.crypto.enabled",
    "diode.crypto.keydir",
    "diode.mirror.poll.interval.ms",
    "diode.mirror.skip",
    "diode.exchange.encrypt",
    "diode.exchange.encrypted",
    "diode.reassembly.stale.ms",
    "diode.reassembly.sweep.ms",
    "diode.reassembly.max.entries",
};

}  // namespace

ParsedProperties parse_properties(const std::string& text) {
    ParsedProperties out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            out.warnings.push_back("line " + std::to_string(lineno) + ": no '=' in: " + t);
            continue;
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (!kKnownKeys.contains(key))
            out.warnings.push_back("line " + std::to_string(lineno) + ": unknown key '" + key +
                                   "'");
        out.values[key] = value;
    }
    return out;
}

BridgeConfig parse_config_text(const std::string& text) {
    ParsedProperties props;
    std::map<std::string, int> key_lines;
    {
        // re-scan for line numbers alongside the generic parse
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            std::size_t eq = t.find('=');
            if (eq != std::string::npos) key_lines[trim(t.substr(0, eq))] = lineno;
        }
        props = parse_properties(text);
    }

    BridgeConfig cfg;
    auto get = [&](std::initializer_list<const char*> keys) -> std::optional<std::pair<std::string, std::pair<std::string, int>>> {
        for (const char* k : keys) {
            auto it = props.values.find(k);
            if (it != props.values.end())
                return std::make_pair(std::string(k),
                                      std::make_pair(it->second, key_lines[k]));
        }
        return std::nullopt;
    };

    if (auto v = get({"application.datadiode.cutter.size", "diode.cutter.size"})) {
        long long n = parse_int(v->first, v->second.first, v->second.second);
        if (n < 1) throw ParseError("cutter size must be >= 1");
        cfg.cutter.segment_size = static_cast<std::uint32_t>(n);
    }
    if (auto v = get({"application.stream.cutter.redundancyFactor", "diode.cutter.redundancy"})) {
        long long n = parse_int(v->first, v->second.first, v->second.second);
        if (n < 1) throw ParseError("redundancy factor must be >= 1");
        cfg.cutter.redundancy_factor = static_cast<std::uint32_t>(n);
    }
    if (auto v = get({"diode.cutter.shuffle.seed"}))
        cfg.cutter.shuffle_seed =
            static_cast<std::uint64_t>(parse_int(v->first, v->second.first, v->second.second));
    if (auto v = get({"application.datadiode.udp.external.rate", "diode.udp.rate"})) {
        double r = parse_double(v->first, v->second.first, v->second.second);
        if (r <= 0) throw ParseError("rate must be positive");
        cfg.rate = r;
    }
    if (auto v = get({"diode.udp.burst"}))
        cfg.burst = static_cast<int>(parse_int(v->first, v->second.first, v->second.second));
    if (auto v = get({"diode.udp.mtu"}))
        cfg.mtu = static_cast<std::size_t>(parse_int(v->first, v->second.first, v->second.second));
    if (auto v = get({"application.datadiode.black.udp.compress", "diode.udp.compress"}))
        cfg.compress = parse_bool(v->first, v->second.first, v->second.second);

    if (auto v = get({"application.datadiode.red.cipher.signature"}))
        cfg.crypto.signature_scheme = v->second.first;
    if (auto v = get({"application.datadiode.red.cipher.asymmetrical.algorithm"}))
        cfg.crypto.asym_algorithm = v->second.first;
    if (auto v = get({"application.datadiode.red.cipher.asymmetrical.cipher"}))
        cfg.crypto.asym_cipher = v->second.first;
    if (auto v = get({"application.datadiode.red.cipher.asymmetrical.keysize"}))
        cfg.crypto.asym_keysize =
            static_cast<int>(parse_int(v->first, v->second.first, v->second.second));
    if (auto v = get({"application.datadiode.red.cipher.symmetrical.algorithm"}))
        cfg.crypto.sym_algorithm = v->second.first;
    if (auto v = get({"application.datadiode.red.cipher.symmetrical.cipher"})) {
        auto [alg, mode] = split_cipher(v->first, v->second.first, v->second.second);
        cfg.crypto.sym_algorithm = alg;
        cfg.crypto.sym_mode = mode;
    }
    if (auto v = get({"application.datadiode.red.cipher.symmetrical.keysize"}))
        cfg.crypto.sym_keysize =
            static_cast<int>(parse_int(v->first, v->second.first, v->second.second));

    if (auto v = get({"diode.crypto.enabled"}))
        cfg.crypto_enabled = parse_bool(v->first, v->second.first, v->second.second);
    if (auto v = get({"diode.crypto.keydir"})) cfg.key_dir = v->second.first;
    if (auto v = get({"diode.udp.listen.host"})) cfg.listen_host = v->second.first;
    if (auto v = get({"diode.udp.listen.port"}))
        cfg.listen_port =
            static_cast<std::uint16_t>(parse_int(v->first, v->second.first, v->second.second));
    if (auto v = get({"diode.udp.target.host"})) cfg.target_host = v->second.first;
    if (auto v = get({"diode.udp.target.port"}))
        cfg.target_port =
            static_cast<std::uint16_t>(parse_int(v->first, v->second.first, v->second.second));
    if (auto v = get({"diode.mirror.poll.interval.ms"}))
        cfg.poll_interval =
            std::chrono::milliseconds(parse_int(v->first, v->second.first, v->second.second));
    if (auto v = get({"diode.mirror.skip"})) {
        std::istringstream items(v->second.first);
        std::string item;
        while (std::getline(items, item, ',')) {
            item = trim(item);
            if (!item.empty()) cfg.skip_exchanges.insert(item);
        }
    }
    if (auto v = get({"diode.exchange.encrypt"})) cfg.encrypt_exchange = v->second.first;
    if (auto v = get({"diode.exchange.encrypted"})) cfg.encrypted_exchange = v->second.first;
    if (auto v = get({"diode.reassembly.stale.ms"}))
        cfg.reassembly.stale_after =
            std::chrono::milliseconds(parse_int(v->first, v->second.first, v->second.second));
    if (auto v = get({"diode.reassembly.sweep.ms"}))
        cfg.reassembly.sweep_interval =
            std::chrono::milliseconds(parse_int(v->first, v->second.first, v->second.second));
    if (auto v = get({"diode.reassembly.max.entries"})) {
        long long n = parse_int(v->first, v->second.first, v->second.second);
        if (n < 1) throw ParseError("max entries must be >= 1");
        cfg.reassembly.max_entries = static_cast<std::size_t>(n);
    }

    try {
        cfg.crypto.validate();
    } catch (const UnsupportedParameters& e) {
        throw ParseError(e.what());
    }
    for (const auto& w : props.warnings) std::fprintf(stderr, "config: %s\n", w.c_str());
    return cfg;
}

BridgeConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string write_config(const BridgeConfig& cfg) {
    std::ostringstream out;
    out << "# set this (MTU - 29 bytes header)\n";
    out << "application.datadiode.cutter.size = " << cfg.cutter.segment_size << "\n";
    out << "application.stream.cutter.redundancyFactor = " << cfg.cutter.redundancy_factor << "\n";
    if (cfg.cutter.shuffle_seed)
        out << "diode.cutter.shuffle.seed = " << *cfg.cutter.shuffle_seed << "\n";
    out << "application.datadiode.udp.external.rate = " << cfg.rate << "\n";
    out << "application.datadiode.black.udp.compress = " << (cfg.compress ? "true" : "false")
        << "\n";
    out << "application.datadiode.red.cipher.signature = " << cfg.crypto.signature_scheme << "\n";
    out << "application.datadiode.red.cipher.asymmetrical.algorithm = "
        << cfg.crypto.asym_algorithm << "\n";
    out << "application.datadiode.red.cipher.asymmetrical.cipher = " << cfg.crypto.asym_cipher
        << "\n";
    out << "application.datadiode.red.cipher.asymmetrical.keysize = " << cfg.crypto.asym_keysize
        << "\n";
    out << "application.datadiode.red.cipher.symmetrical.algorithm = " << cfg.crypto.sym_algorithm
        << "\n";
    out << "application.datadiode.red.cipher.symmetrical.cipher = " << cfg.crypto.sym_algorithm
        << "/" << cfg.crypto.sym_mode << "/NoPadding\n";
    out << "application.datadiode.red.cipher.symmetrical.keysize = " << cfg.crypto.sym_keysize
        << "\n";
    out << "diode.udp.burst = " << cfg.burst << "\n";
    out << "diode.udp.mtu = " << cfg.mtu << "\n";
    out << "diode.udp.listen.host = " << cfg.listen_host << "\n";
    out << "diode.udp.listen.port = " << cfg.listen_port << "\n";
    out << "diode.udp.target.host = " << cfg.target_host << "\n";
    out << "diode.udp.target.port = " << cfg.target_port << "\n";
    out << "diode.crypto.enabled = " << (cfg.crypto_enabled ? "true" : "false") << "\n";
    if (!cfg.key_dir.empty()) out << "diode.crypto.keydir = " << cfg.key_dir << "\n";
    out << "diode.mirror.poll.interval.ms = " << cfg.poll_interval.count() << "\n";
    if (!cfg.skip_exchanges.empty()) {
        out << "diode.mirror.skip = ";
        bool first = true;
        for (const auto& s : cfg.skip_exchanges) {
            if (!first) out << ",";
            out << s;
            first = false;
        }
        out << "\n";
    }
    out << "diode.exchange.encrypt = " << cfg.encrypt_exchange << "\n";
    out << "diode.exchange.encrypted = " << cfg.encrypted_exchange << "\n";
    out << "diode.reassembly.stale.ms = " << cfg.reassembly.stale_after.count() << "\n";
    out << "diode.reassembly.sweep.ms = " << cfg.reassembly.sweep_interval.count() << "\n";
    out << "diode.reassembly.max.entries = " << cfg.reassembly.max_entries << "\n";
    return out.str();
}

}  // namespace diode
