// Serves a builtin encoder on stdin/stdout; used by the exec: transport tests.
#include <string>

#include "glyphforge/bridge.hpp"

int main(int argc, char** argv) {
  const std::string kind = argc > 1 ? argv[1] : "builtin-semantic";
  auto encoder = glyphforge::make_encoder(kind);
  glyphforge::bridge::serve(*encoder, 0, 1);
  return 0;
}
