#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "glyphforge/encoder.hpp"
#include "glyphforge/image_io.hpp"

namespace glyphforge {

/// Wire protocol spoken with an out-of-process encoder.
///
///   frame   = "GLY1" | code u8 | payload_len u32 LE | payload
///   request code = opcode, response code = status
///
/// Payloads use the Tensor encoding and length-prefixed UTF-8 text.
namespace bridge {

inline constexpr std::string_view kMagic = "GLY1";
inline constexpr std::size_t kHeaderSize = 9;

enum class Opcode : std::uint8_t {
  embed_image = 1,
  activation_map = 2,
  loss_and_grad = 3,
  embed_text = 4,
  describe = 5,
};

enum class Status : std::uint8_t {
  ok = 0,
  capability_error = 1,
  malformed = 2,
  internal = 3,
};

struct Frame {
  std::uint8_t code = 0;
  std::string payload;
};

std::string encode_frame(std::uint8_t code, std::string_view payload);
/// Parses one complete frame; throws FormatError on bad magic and LengthError on truncation.
Frame decode_frame(std::string_view bytes);

void encode_text(ByteWriter& out, std::string_view text);
std::string decode_text(ByteReader& in);

/// Images travel as H x W x 3; single-channel images are replicated.
Tensor image_tensor(const RasterImage& image);

struct Description {
  std::string name;
  std::uint32_t embedding_dim = 0;
  std::uint8_t capabilities = 0;
};

std::string encode_description(const Description& d);
Description decode_description(std::string_view payload);

/// Serves one request frame with a local encoder and returns the response frame.
/// Never throws; failures become status frames.
std::string handle_request(Encoder& encoder, std::string_view request);

/// Reads frames from in_fd until EOF and writes responses to out_fd.
void serve(Encoder& encoder, int in_fd, int out_fd);

}  // namespace bridge

/// Bidirectional byte stream over file descriptors. Owns the descriptors and,
/// for spawned servers, the child process.
class BridgeConnection {
 public:
  /// Address forms: "unix:/path/to.sock", "tcp:host:port", "host:port", "exec:<shell command>".
  static BridgeConnection open(const std::string& address);
  /// Takes ownership of already-connected descriptors (in_fd may equal out_fd).
  static BridgeConnection adopt(int in_fd, int out_fd);

  BridgeConnection(BridgeConnection&& other) noexcept;
  BridgeConnection& operator=(BridgeConnection&& other) noexcept;
  BridgeConnection(const BridgeConnection&) = delete;
  BridgeConnection& operator=(const BridgeConnection&) = delete;
  ~BridgeConnection();

  /// Sends one request and blocks for the response frame.
  bridge::Frame round_trip(bridge::Opcode op, std::string_view payload);

 private:
  BridgeConnection(int in_fd, int out_fd, int child) : in_fd_(in_fd), out_fd_(out_fd), child_(child) {}
  void close() noexcept;
  void write_all(std::string_view bytes);
  std::string read_exact(std::size_t n);

  int in_fd_ = -1;
  int out_fd_ = -1;
  int child_ = -1;
};

/// Encoder backed by a bridge server. Calls are serialized on one connection.
class BridgeEncoder final : public Encoder {
 public:
  explicit BridgeEncoder(const std::string& address);
  explicit BridgeEncoder(BridgeConnection connection);

  const EncoderDescriptor& descriptor() const override { return descriptor_; }
  Embedding embed_image(const RasterImage& image) override;
  ActivationMap activation_map(const RasterImage& image, CanvasSize canvas) override;
  LossGradResult loss_and_grad(const RasterImage& image, const Embedding& target) override;
  Embedding embed_text(const std::string& text) override;

 private:
  std::string call(bridge::Opcode op, std::string_view payload);
  void require(Capability c, const char* what) const;

  std::mutex mutex_;
  BridgeConnection connection_;
  EncoderDescriptor descriptor_;
};

}  // namespace glyphforge
