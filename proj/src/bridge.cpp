#include "glyphforge/bridge.hpp"

#include <netdb.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>

#include "glyphforge/errors.hpp"

namespace glyphforge {
namespace bridge {

std::string encode_frame(std::uint8_t code, std::string_view payload) {
  if (payload.size() > 0xffffffffu) throw ContractError("bridge payload exceeds 4 GiB");
  ByteWriter w;
  w.raw(kMagic);
  w.u8(code);
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.raw(payload);
  return w.take();
}

Frame decode_frame(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.raw(kMagic.size()) != kMagic) throw FormatError("bridge frame has bad magic");
  Frame f;
  f.code = r.u8();
  const std::uint32_t len = r.u32();
  f.payload = std::string(r.raw(len));
  if (!r.done()) throw FormatError("bridge frame has trailing bytes");
  return f;
}

void encode_text(ByteWriter& out, std::string_view text) {
  out.u32(static_cast<std::uint32_t>(text.size()));
  out.raw(text);
}

std::string decode_text(ByteReader& in) {
  const std::uint32_t len = in.u32();
  return std::string(in.raw(len));
}

Tensor image_tensor(const RasterImage& image) {
  if (image.channels == 3) return to_tensor(image);
  RasterImage rgb(image.height, image.width, 3, 0.0);
  const std::size_t n = static_cast<std::size_t>(image.height) * image.width;
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    for (int ch = 0; ch < image.channels; ++ch) v += image.data[i * image.channels + ch];
    v /= image.channels;
    for (int ch = 0; ch < 3; ++ch) rgb.data[i * 3 + ch] = v;
  }
  return to_tensor(rgb);
}

std::string encode_description(const Description& d) {
  ByteWriter w;
  encode_text(w, d.name);
  w.u32(d.embedding_dim);
  w.u8(d.capabilities);
  return w.take();
}

Description decode_description(std::string_view payload) {
  ByteReader r(payload);
  Description d;
  d.name = decode_text(r);
  d.embedding_dim = r.u32();
  d.capabilities = r.u8();
  if (!r.done()) throw FormatError("describe payload has trailing bytes");
  return d;
}

namespace {

Tensor vector_tensor(const std::vector<double>& v) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(v.size())};
  t.values.assign(v.begin(), v.end());
  return t;
}

std::string error_frame(Status status, std::string_view message) {
  return encode_frame(static_cast<std::uint8_t>(status), message);
}

RasterImage read_image(ByteReader& r) {
  RasterImage img = image_from_tensor(decode_tensor(r));
  if (img.channels != 3) throw FormatError("bridge images must be H x W x 3");
  validate(img);
  return img;
}

std::string dispatch(Encoder& encoder, const Frame& frame) {
  ByteReader r(frame.payload);
  ByteWriter w;
  switch (static_cast<Opcode>(frame.code)) {
    case Opcode::embed_image: {
      const RasterImage img = read_image(r);
      if (!r.done()) throw FormatError("trailing payload bytes");
      encode_tensor(w, vector_tensor(encoder.embed_image(img).values));
      break;
    }
    case Opcode::activation_map: {
      const RasterImage img = read_image(r);
      if (!r.done()) throw FormatError("trailing payload bytes");
      const ActivationMap map = encoder.activation_map(img, {img.height, img.width});
      Tensor t;
      t.dims = {static_cast<std::uint32_t>(map.height), static_cast<std::uint32_t>(map.width)};
      t.values.assign(map.data.begin(), map.data.end());
      encode_tensor(w, t);
      break;
    }
    case Opcode::loss_and_grad: {
      const RasterImage img = read_image(r);
      const Tensor target = decode_tensor(r);
      if (!r.done()) throw FormatError("trailing payload bytes");
      Embedding e;
      e.values.assign(target.values.begin(), target.values.end());
      const LossGradResult res = encoder.loss_and_grad(img, e);
      w.f32(static_cast<float>(res.loss));
      Tensor g;
      g.dims = {static_cast<std::uint32_t>(res.pixel_grad.height), static_cast<std::uint32_t>(res.pixel_grad.width),
                static_cast<std::uint32_t>(res.pixel_grad.channels)};
      g.values.assign(res.pixel_grad.data.begin(), res.pixel_grad.data.end());
      encode_tensor(w, g);
      break;
    }
    case Opcode::embed_text: {
      const std::string text = decode_text(r);
      if (!r.done()) throw FormatError("trailing payload bytes");
      encode_tensor(w, vector_tensor(encoder.embed_text(text).values));
      break;
    }
    case Opcode::describe: {
      if (!r.done()) throw FormatError("describe takes no payload");
      const auto& d = encoder.descriptor();
      return encode_frame(static_cast<std::uint8_t>(Status::ok),
                          encode_description({d.name, static_cast<std::uint32_t>(d.embedding_dim), d.capabilities}));
    }
    default:
      throw FormatError("unknown opcode " + std::to_string(frame.code));
  }
  return encode_frame(static_cast<std::uint8_t>(Status::ok), w.bytes());
}

bool read_exact_fd(int fd, char* buf, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t k = ::read(fd, buf + got, n - got);
    if (k < 0 && errno == EINTR) continue;
    if (k <= 0) return false;
    got += static_cast<std::size_t>(k);
  }
  return true;
}

bool write_all_fd(int fd, std::string_view bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    ssize_t k = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (k < 0 && errno == ENOTSOCK) k = ::write(fd, bytes.data() + sent, bytes.size() - sent);
    if (k < 0 && errno == EINTR) continue;
    if (k <= 0) return false;
    sent += static_cast<std::size_t>(k);
  }
  return true;
}

}  // namespace

std::string handle_request(Encoder& encoder, std::string_view request) {
  Frame frame;
  try {
    frame = decode_frame(request);
  } catch (const std::exception& e) {
    return error_frame(Status::malformed, e.what());
  }
  try {
    return dispatch(encoder, frame);
  } catch (const CapabilityError& e) {
    return error_frame(Status::capability_error, e.what());
  } catch (const FormatError& e) {
    return error_frame(Status::malformed, e.what());
  } catch (const LengthError& e) {
    return error_frame(Status::malformed, e.what());
  } catch (const ContractError& e) {
    return error_frame(Status::malformed, e.what());
  } catch (const std::exception& e) {
    return error_frame(Status::internal, e.what());
  }
}

void serve(Encoder& encoder, int in_fd, int out_fd) {
  for (;;) {
    std::string header(kHeaderSize, '\0');
    if (!read_exact_fd(in_fd, header.data(), header.size())) return;
    if (std::string_view(header).substr(0, kMagic.size()) != kMagic) {
      // The stream cannot be resynchronized after a bad header.
      write_all_fd(out_fd, error_frame(Status::malformed, "bad magic"));
      return;
    }
    ByteReader hr(std::string_view(header).substr(kMagic.size() + 1));
    const std::uint32_t len = hr.u32();
    std::string payload(len, '\0');
    if (!read_exact_fd(in_fd, payload.data(), payload.size())) return;
    if (!write_all_fd(out_fd, handle_request(encoder, header + payload))) return;
  }
}

}  // namespace bridge

// ---------------------------------------------------------------------------

BridgeConnection BridgeConnection::adopt(int in_fd, int out_fd) { return BridgeConnection(in_fd, out_fd, -1); }

BridgeConnection BridgeConnection::open(const std::string& address) {
  if (address.rfind("unix:", 0) == 0) {
    const std::string path = address.substr(5);
    sockaddr_un sa{};
    if (path.size() >= sizeof(sa.sun_path)) throw TransportError("unix socket path too long: " + path);
    sa.sun_family = AF_UNIX;
    std::memcpy(sa.sun_path, path.c_str(), path.size() + 1);
    const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError(std::string("socket: ") + std::strerror(errno));
    if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
      const std::string err = std::strerror(errno);
      ::close(fd);
      throw TransportError("cannot connect to " + path + ": " + err);
    }
    return BridgeConnection(fd, fd, -1);
  }
  if (address.rfind("exec:", 0) == 0) {
    const std::string command = address.substr(5);
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0) throw TransportError("pipe failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw TransportError("pipe failed");
    }
    const pid_t pid = ::fork();
    if (pid < 0) throw TransportError("fork failed");
    if (pid == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    return BridgeConnection(from_child[0], to_child[1], pid);
  }

  std::string hostport = address.rfind("tcp:", 0) == 0 ? address.substr(4) : address;
  const auto colon = hostport.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == hostport.size()) {
    throw TransportError("bridge address must be unix:<path>, exec:<command> or host:port, got '" + address + "'");
  }
  const std::string host = hostport.substr(0, colon);
  const std::string port = hostport.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr) {
    throw TransportError("cannot resolve " + hostport);
  }
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw TransportError("cannot connect to " + hostport);
  return BridgeConnection(fd, fd, -1);
}

BridgeConnection::BridgeConnection(BridgeConnection&& other) noexcept
    : in_fd_(std::exchange(other.in_fd_, -1)),
      out_fd_(std::exchange(other.out_fd_, -1)),
      child_(std::exchange(other.child_, -1)) {}

BridgeConnection& BridgeConnection::operator=(BridgeConnection&& other) noexcept {
  if (this != &other) {
    close();
    in_fd_ = std::exchange(other.in_fd_, -1);
    out_fd_ = std::exchange(other.out_fd_, -1);
    child_ = std::exchange(other.child_, -1);
  }
  return *this;
}

BridgeConnection::~BridgeConnection() { close(); }

void BridgeConnection::close() noexcept {
  if (out_fd_ >= 0 && out_fd_ != in_fd_) ::close(out_fd_);
  if (in_fd_ >= 0) ::close(in_fd_);
  in_fd_ = out_fd_ = -1;
  if (child_ > 0) {
    int status = 0;
    ::waitpid(child_, &status, 0);
    child_ = -1;
  }
}

void BridgeConnection::write_all(std::string_view bytes) {
  if (out_fd_ < 0 || !bridge::write_all_fd(out_fd_, bytes)) throw TransportError("bridge write failed");
}

std::string BridgeConnection::read_exact(std::size_t n) {
  std::string buf(n, '\0');
  if (in_fd_ < 0 || !bridge::read_exact_fd(in_fd_, buf.data(), n)) {
    throw TransportError("bridge closed the connection mid-frame");
  }
  return buf;
}

bridge::Frame BridgeConnection::round_trip(bridge::Opcode op, std::string_view payload) {
  write_all(bridge::encode_frame(static_cast<std::uint8_t>(op), payload));
  const std::string header = read_exact(bridge::kHeaderSize);
  if (std::string_view(header).substr(0, bridge::kMagic.size()) != bridge::kMagic) {
    throw TransportError("bridge response has bad magic");
  }
  ByteReader r(std::string_view(header).substr(bridge::kMagic.size()));
  bridge::Frame f;
  f.code = r.u8();
  f.payload = read_exact(r.u32());
  return f;
}

// ---------------------------------------------------------------------------

BridgeEncoder::BridgeEncoder(const std::string& address) : BridgeEncoder(BridgeConnection::open(address)) {}

BridgeEncoder::BridgeEncoder(BridgeConnection connection) : connection_(std::move(connection)) {
  const bridge::Description d = bridge::decode_description(call(bridge::Opcode::describe, {}));
  descriptor_.name = d.name;
  descriptor_.kind = EncoderKind::bridge;
  descriptor_.embedding_dim = d.embedding_dim;
  descriptor_.capabilities = d.capabilities;
}

std::string BridgeEncoder::call(bridge::Opcode op, std::string_view payload) {
  std::lock_guard lock(mutex_);
  bridge::Frame f = connection_.round_trip(op, payload);
  switch (static_cast<bridge::Status>(f.code)) {
    case bridge::Status::ok:
      return std::move(f.payload);
    case bridge::Status::capability_error:
      throw CapabilityError("bridge: " + f.payload);
    case bridge::Status::malformed:
      throw TransportError("bridge rejected request as malformed: " + f.payload);
    case bridge::Status::internal:
      throw TransportError("bridge internal error: " + f.payload);
  }
  throw TransportError("bridge returned unknown status " + std::to_string(f.code));
}

void BridgeEncoder::require(Capability c, const char* what) const {
  if (!descriptor_.has(c)) throw CapabilityError(descriptor_.name + " does not support " + what);
}

namespace {

Embedding embedding_from_payload(const std::string& payload, std::size_t dim) {
  ByteReader r(payload);
  const Tensor t = decode_tensor(r);
  if (!r.done() || t.dims.size() != 1 || t.values.size() != dim) {
    throw TransportError("bridge returned an embedding of unexpected shape");
  }
  Embedding e;
  e.values.assign(t.values.begin(), t.values.end());
  for (double v : e.values) {
    if (!std::isfinite(v)) throw TransportError("bridge returned a non-finite embedding");
  }
  e.degenerate = l2_norm(e.values) == 0.0;
  return e;
}

}  // namespace

Embedding BridgeEncoder::embed_image(const RasterImage& image) {
  require(Capability::embed_image, "embed_image");
  ByteWriter w;
  encode_tensor(w, bridge::image_tensor(image));
  return embedding_from_payload(call(bridge::Opcode::embed_image, w.bytes()), descriptor_.embedding_dim);
}

ActivationMap BridgeEncoder::activation_map(const RasterImage& image, CanvasSize canvas) {
  require(Capability::activation_map, "activation_map");
  ByteWriter w;
  encode_tensor(w, bridge::image_tensor(image));
  const std::string payload = call(bridge::Opcode::activation_map, w.bytes());
  ByteReader r(payload);
  const Tensor t = decode_tensor(r);
  if (!r.done() || t.dims.size() != 2) throw TransportError("bridge returned an activation map of unexpected shape");
  ActivationMap map(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]));
  map.data.assign(t.values.begin(), t.values.end());
  validate(map);
  return resize_map(map, canvas.height, canvas.width);
}

LossGradResult BridgeEncoder::loss_and_grad(const RasterImage& image, const Embedding& target) {
  require(Capability::loss_grad, "loss_and_grad");
  if (target.values.size() != descriptor_.embedding_dim) throw ContractError("target embedding dimension mismatch");
  LossGradResult out;
  out.pixel_grad = PixelGrad(image.height, image.width, image.channels, 0.0);
  if (l2_norm(target.values) == 0.0) {
    out.degenerate = true;
    return out;
  }
  ByteWriter w;
  encode_tensor(w, bridge::image_tensor(image));
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(target.values.size())};
  t.values.assign(target.values.begin(), target.values.end());
  encode_tensor(w, t);
  const std::string payload = call(bridge::Opcode::loss_and_grad, w.bytes());
  ByteReader r(payload);
  out.loss = r.f32();
  const Tensor g = decode_tensor(r);
  if (!r.done() || g.dims.size() != 3 || g.dims[0] != static_cast<std::uint32_t>(image.height) ||
      g.dims[1] != static_cast<std::uint32_t>(image.width) || g.dims[2] != 3) {
    throw TransportError("bridge returned a gradient of unexpected shape");
  }
  if (!std::isfinite(out.loss)) throw TransportError("bridge returned a non-finite loss");
  const std::size_t n = static_cast<std::size_t>(image.height) * image.width;
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int ch = 0; ch < 3; ++ch) sum += g.values[i * 3 + ch];
    for (int ch = 0; ch < image.channels; ++ch) {
      // Single-channel images were replicated on the way out.
      out.pixel_grad.data[i * image.channels + ch] =
          image.channels == 3 ? g.values[i * 3 + ch] : sum / image.channels;
    }
  }
  return out;
}

Embedding BridgeEncoder::embed_text(const std::string& text) {
  require(Capability::embed_text, "embed_text");
  ByteWriter w;
  bridge::encode_text(w, text);
  return embedding_from_payload(call(bridge::Opcode::embed_text, w.bytes()), descriptor_.embedding_dim);
}

}  // namespace glyphforge
