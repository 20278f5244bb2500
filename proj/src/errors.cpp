#include "graphtext/errors.hpp"

namespace graphtext {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ArgumentError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const FormatError*>(&e) != nullptr) return 3;
  if (dynamic_cast<const EmptyGraphError*>(&e) != nullptr) return 3;
  if (dynamic_cast<const CompatibilityError*>(&e) != nullptr) return 3;
  if (dynamic_cast<const CredentialError*>(&e) != nullptr) return 4;
  if (dynamic_cast<const TransportError*>(&e) != nullptr) return 4;
  if (dynamic_cast<const ProtocolError*>(&e) != nullptr) return 4;
  if (dynamic_cast<const StateError*>(&e) != nullptr) return 5;
  if (dynamic_cast<const TrainingError*>(&e) != nullptr) return 5;
  return 1;
}

}  // namespace graphtext
