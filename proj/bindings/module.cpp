// Python bindings for the core gateway operations.
#include <pybind11/chrono.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "diode/broker.hpp"
#include "diode/crypto.hpp"
#include "diode/envelope.hpp"
#include "diode/errors.hpp"
#include "diode/reassembly.hpp"
#include "diode/segmentation.hpp"
#include "diode/sensor.hpp"
#include "diode/transport.hpp"

namespace py = pybind11;
using namespace diode;

namespace {

Bytes to_vec(const py::bytes& b) {
    std::string s = b;
    return Bytes(s.begin(), s.end());
}

py::bytes to_py(const Bytes& b) {
    return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

}  // namespace

PYBIND11_MODULE(pydiode, m) {
    m.doc() = "one-way gateway core: segmentation, reassembly, envelope, crypto";

    auto base = py::register_exception<DiodeError>(m, "DiodeError");
    py::register_exception<MalformedEnvelope>(m, "MalformedEnvelope", base.ptr());
    py::register_exception<ChecksumMismatch>(m, "ChecksumMismatch", base.ptr());
    py::register_exception<InconsistentMessage>(m, "InconsistentMessage", base.ptr());
    py::register_exception<SignatureInvalid>(m, "SignatureInvalid", base.ptr());
    py::register_exception<AeadAuthFailed>(m, "AeadAuthFailed", base.ptr());
    py::register_exception<UnsupportedParameters>(m, "UnsupportedParameters", base.ptr());

    py::enum_<ExchangeKind>(m, "ExchangeKind")
        .value("fanout", ExchangeKind::fanout)
        .value("direct", ExchangeKind::direct)
        .value("topic", ExchangeKind::topic)
        .value("headers", ExchangeKind::headers);

    py::class_<MessageProperties>(m, "MessageProperties")
        .def(py::init<>())
        .def_readwrite("routing_key", &MessageProperties::routing_key)
        .def_readwrite("headers", &MessageProperties::headers)
        .def_readwrite("content_type", &MessageProperties::content_type)
        .def_readwrite("received_exchange", &MessageProperties::received_exchange)
        .def(py::self == py::self);

    py::class_<Message>(m, "Message")
        .def(py::init<>())
        .def_property(
            "body", [](const Message& msg) { return to_py(msg.body); },
            [](Message& msg, const py::bytes& b) { msg.body = to_vec(b); })
        .def_readwrite("properties", &Message::properties)
        .def(py::self == py::self);

    py::class_<ExchangeSpec>(m, "ExchangeSpec")
        .def(py::init<>())
        .def(py::init([](ExchangeKind kind, const std::string& name) {
                 ExchangeSpec s;
                 s.kind = kind;
                 s.name = name;
                 return s;
             }),
             py::arg("kind"), py::arg("name"))
        .def_readwrite("kind", &ExchangeSpec::kind)
        .def_readwrite("name", &ExchangeSpec::name)
        .def_readwrite("durable", &ExchangeSpec::durable)
        .def_readwrite("auto_delete", &ExchangeSpec::auto_delete)
        .def_readwrite("arguments", &ExchangeSpec::arguments)
        .def(py::self == py::self);

    py::class_<ExchangeMessage>(m, "ExchangeMessage")
        .def(py::init<>())
        .def_readwrite("exchange", &ExchangeMessage::exchange)
        .def_readwrite("message", &ExchangeMessage::message)
        .def(py::self == py::self);

    m.def(
        "serialize_exchange_message",
        [](const ExchangeMessage& em, bool compress) {
            return to_py(serialize_exchange_message(em, compress));
        },
        py::arg("message"), py::arg("compress") = false);
    m.def("deserialize_exchange_message",
          [](const py::bytes& b) { return deserialize_exchange_message(to_vec(b)); });
    m.def("deflate_bytes", [](const py::bytes& b) { return to_py(deflate_bytes(to_vec(b))); });
    m.def("inflate_bytes", [](const py::bytes& b) { return to_py(inflate_bytes(to_vec(b))); });

    py::class_<Uuid>(m, "Uuid")
        .def(py::init<>())
        .def(py::init([](std::uint64_t hi, std::uint64_t lo) { return Uuid{hi, lo}; }),
             py::arg("hi"), py::arg("lo"))
        .def_readwrite("hi", &Uuid::hi)
        .def_readwrite("lo", &Uuid::lo)
        .def("__eq__", [](const Uuid& a, const Uuid& b) { return a == b; })
        .def("__hash__", [](const Uuid& u) { return py::hash(py::make_tuple(u.hi, u.lo)); })
        .def("__repr__", [](const Uuid& u) { return "Uuid(" + to_string(u) + ")"; });

    py::class_<CutterConfig>(m, "CutterConfig")
        .def(py::init<>())
        .def_readwrite("segment_size", &CutterConfig::segment_size)
        .def_readwrite("redundancy_factor", &CutterConfig::redundancy_factor)
        .def_readwrite("shuffle_seed", &CutterConfig::shuffle_seed);

    py::class_<Segment>(m, "Segment")
        .def(py::init<>())
        .def_readwrite("uuid", &Segment::uuid)
        .def_readwrite("count", &Segment::count)
        .def_readwrite("index", &Segment::index)
        .def_property(
            "payload", [](const Segment& s) { return to_py(s.payload); },
            [](Segment& s, const py::bytes& b) { s.payload = to_vec(b); });

    py::class_<SegmentHeader>(m, "SegmentHeader")
        .def(py::init<>())
        .def_readwrite("uuid", &SegmentHeader::uuid)
        .def_readwrite("count", &SegmentHeader::count)
        .def_readwrite("total_length", &SegmentHeader::total_length)
        .def_property_readonly("checksum", [](const SegmentHeader& h) {
            return py::bytes(reinterpret_cast<const char*>(h.checksum.data()), h.checksum.size());
        });

    m.def(
        "cut",
        [](const py::bytes& payload, const CutterConfig& cfg) { return cut(to_vec(payload), cfg); },
        py::arg("payload"), py::arg("config") = CutterConfig{});
    m.def("checksum", [](const py::bytes& b) {
        Digest d = checksum(to_vec(b));
        return py::bytes(reinterpret_cast<const char*>(d.data()), d.size());
    });
    m.def("encode_packet", [](const Segment& s) { return to_py(encode_packet(s)); });
    m.def("encode_header_packet", [](const SegmentHeader& h) { return to_py(encode_packet(h)); });
    m.def("decode_packet", [](const py::bytes& b) -> py::object {
        Packet p = decode_packet(to_vec(b));
        if (std::holds_alternative<SegmentHeader>(p)) return py::cast(std::get<SegmentHeader>(p));
        return py::cast(std::get<Segment>(p));
    });
    m.def(
        "replicate_and_shuffle",
        [](const SegmentHeader& h, const std::vector<Segment>& segments, const CutterConfig& cfg) {
            std::vector<py::bytes> out;
            for (const auto& p : replicate_and_shuffle(h, segments, cfg)) out.push_back(to_py(p));
            return out;
        },
        py::arg("header"), py::arg("segments"), py::arg("config") = CutterConfig{});

    py::class_<ReassemblyConfig>(m, "ReassemblyConfig")
        .def(py::init<>())
        .def_readwrite("stale_after", &ReassemblyConfig::stale_after)
        .def_readwrite("sweep_interval", &ReassemblyConfig::sweep_interval)
        .def_readwrite("max_entries", &ReassemblyConfig::max_entries);

    py::class_<ReassemblyBuffer>(m, "ReassemblyBuffer")
        .def(py::init<>())
        .def(py::init<ReassemblyConfig>())
        .def(
            "insert",
            [](ReassemblyBuffer& buf, const py::bytes& datagram) -> py::object {
                auto r = buf.insert(decode_packet(to_vec(datagram)));
                if (!r) return py::none();
                return py::make_tuple(r->uuid, to_py(r->payload));
            },
            "feed one encoded packet; returns (uuid, payload) when a message completes")
        .def("entry_count", &ReassemblyBuffer::entry_count)
        .def("sweep", [](ReassemblyBuffer& buf) { return buf.sweep().size(); })
        .def_property_readonly("released",
                               [](const ReassemblyBuffer& buf) { return buf.stats().released; })
        .def_property_readonly("checksum_failures", [](const ReassemblyBuffer& buf) {
            return buf.stats().checksum_failures;
        });

    py::class_<CryptoConfig>(m, "CryptoConfig")
        .def(py::init<>())
        .def_readwrite("signature_scheme", &CryptoConfig::signature_scheme)
        .def_readwrite("asym_keysize", &CryptoConfig::asym_keysize)
        .def_readwrite("sym_algorithm", &CryptoConfig::sym_algorithm)
        .def_readwrite("sym_mode", &CryptoConfig::sym_mode)
        .def_readwrite("sym_keysize", &CryptoConfig::sym_keysize)
        .def("validate", &CryptoConfig::validate);

    py::class_<AsymKey>(m, "AsymKey")
        .def_static("generate", &AsymKey::generate, py::arg("bits"))
        .def_static("from_pem", &AsymKey::from_pem)
        .def("private_pem", &AsymKey::private_pem)
        .def("public_pem", &AsymKey::public_pem)
        .def("public_half", &AsymKey::public_half)
        .def("has_private", &AsymKey::has_private)
        .def("bits", &AsymKey::bits);

    py::class_<KeyMaterial>(m, "KeyMaterial")
        .def(py::init<>())
        .def_readwrite("sender_signing", &KeyMaterial::sender_signing)
        .def_readwrite("receiver_wrap", &KeyMaterial::receiver_wrap);

    py::class_<SecureMessage>(m, "SecureMessage")
        .def(py::init<>())
        .def_readwrite("index", &SecureMessage::index)
        .def_property(
            "signature", [](const SecureMessage& sm) { return to_py(sm.signature); },
            [](SecureMessage& sm, const py::bytes& b) { sm.signature = to_vec(b); })
        .def_property(
            "encrypted_key", [](const SecureMessage& sm) { return to_py(sm.encrypted_key); },
            [](SecureMessage& sm, const py::bytes& b) { sm.encrypted_key = to_vec(b); })
        .def_property(
            "encrypted_data", [](const SecureMessage& sm) { return to_py(sm.encrypted_data); },
            [](SecureMessage& sm, const py::bytes& b) { sm.encrypted_data = to_vec(b); })
        .def_property(
            "iv", [](const SecureMessage& sm) { return to_py(sm.iv); },
            [](SecureMessage& sm, const py::bytes& b) { sm.iv = to_vec(b); });

    m.def("generate_keys", &generate_keys, py::arg("config") = CryptoConfig{});
    m.def(
        "encrypt_and_sign",
        [](const py::bytes& plaintext, std::uint64_t index, const KeyMaterial& keys,
           const CryptoConfig& cfg) { return encrypt_and_sign(to_vec(plaintext), index, keys, cfg); },
        py::arg("plaintext"), py::arg("index"), py::arg("keys"),
        py::arg("config") = CryptoConfig{});
    m.def(
        "verify_and_decrypt",
        [](const SecureMessage& sm, const KeyMaterial& keys, const CryptoConfig& cfg) {
            return to_py(verify_and_decrypt(sm, keys, cfg));
        },
        py::arg("message"), py::arg("keys"), py::arg("config") = CryptoConfig{});
    m.def("secure_message_to_json", &secure_message_to_json);
    m.def("secure_message_from_json", &secure_message_from_json);
    m.def("eax_encrypt", [](const py::bytes& key, const py::bytes& nonce, const py::bytes& aad,
                            const py::bytes& msg) {
        return to_py(eax_encrypt(to_vec(key), to_vec(nonce), to_vec(aad), to_vec(msg)));
    });
    m.def("eax_decrypt", [](const py::bytes& key, const py::bytes& nonce, const py::bytes& aad,
                            const py::bytes& ct) {
        return to_py(eax_decrypt(to_vec(key), to_vec(nonce), to_vec(aad), to_vec(ct)));
    });

    m.def("topic_match", &topic_match, py::arg("pattern"), py::arg("routing_key"));

    py::class_<ChannelModel>(m, "ChannelModel")
        .def(py::init<>())
        .def_readwrite("loss_probability", &ChannelModel::loss_probability)
        .def_readwrite("duplicate_probability", &ChannelModel::duplicate_probability)
        .def_readwrite("reorder_window", &ChannelModel::reorder_window)
        .def_readwrite("seed", &ChannelModel::seed);

    m.def("simulate_channel", [](const std::vector<py::bytes>& in, const ChannelModel& model) {
        std::vector<Bytes> packets;
        packets.reserve(in.size());
        for (const auto& b : in) packets.push_back(to_vec(b));
        std::vector<py::bytes> out;
        for (const auto& p : simulate_channel(packets, model)) out.push_back(to_py(p));
        return out;
    });

    m.def("detect_missing_indexes", [](const std::vector<std::uint64_t>& indexes) {
        std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
        for (const auto& g : detect_missing_indexes(indexes)) out.emplace_back(g.expected, g.observed);
        return out;
    });
}
