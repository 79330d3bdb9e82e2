#include "infodens/error.hpp"

namespace infodens {

AlignmentError::AlignmentError(const std::string& doc_id, std::size_t index)
    : Error("alignment",
            "document '" + doc_id + "': token mismatch at index " + std::to_string(index)),
      doc_id_(doc_id),
      index_(index) {}

}  // namespace infodens
