#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "retro/gveb.hpp"

namespace retro {

namespace gusf_detail {
struct BNode;
struct Block;
}  // namespace gusf_detail

/// Ordered list of elements, each carrying up to two colors, supporting
/// colored successor/predecessor from a position, colored positional range
/// reporting, mark/unmark, and add/remove. Elements are grouped into blocks;
/// each block is a balanced leaf tree with per-node color summaries and
/// per-color leaf lists, and blocks are indexed by integer order-maintenance
/// labels in a GVEB tree. Element pointers stay stable across every internal
/// reorganization. Single writer; queries must not race mutation.
class GusfCatalog {
  public:
    using Element = gusf_detail::BNode;
    static constexpr int kColorCap = 2;

    explicit GusfCatalog(int ncolors);
    ~GusfCatalog();
    GusfCatalog(const GusfCatalog&) = delete;
    GusfCatalog& operator=(const GusfCatalog&) = delete;

    /// Inserts an unmarked element before `next` (append when nullptr).
    Element* insert_before(Element* next, uint64_t tag);
    Element* push_back(uint64_t tag) { return insert_before(nullptr, tag); }
    /// Lazy removal; x must be live and unmarked. The whole catalog is
    /// rebuilt once tombstones outnumber live elements.
    void remove(Element* x);

    /// Throws std::invalid_argument when the color is already present /
    /// absent or the per-element color cap is hit.
    void mark(Element* x, int color);
    void unmark(Element* x, int color);

    static ColorSet colors(const Element* x);
    static uint64_t tag(const Element* x);
    static bool is_tombstone(const Element* x);

    /// First element y >= x in list order with colors(y) & cq, x included.
    Element* find_next(const Element* x, ColorSet cq) const;
    Element* find_prev(const Element* x, ColorSet cq) const;
    Element* first_colored(ColorSet cq) const;

    /// Every element positioned in [y1, y2] with a color in cq, each once,
    /// in no particular order.
    std::vector<Element*> report(const Element* y1, const Element* y2, ColorSet cq) const;

    /// Strict list order. Equal elements compare false.
    bool precedes(const Element* a, const Element* b) const;

    void for_each_live(const std::function<void(Element*)>& fn) const;

    size_t live_size() const { return live_; }
    size_t total_size() const { return live_ + dead_; }
    int ncolors() const { return ncolors_; }
    size_t block_count() const;
    uint32_t block_limit() const { return block_cap_; }  // 2B

    uint64_t structural_work() const { return work_; }
    void reset_counter() { work_ = 0; }
    uint64_t relabel_count() const { return relabels_; }

    /// Test hook: full consistency audit (tree sizes, color summaries,
    /// per-color lists, block index). Throws std::logic_error on violation.
    void audit() const;

  private:
    using Block = gusf_detail::Block;

    int ncolors_;
    size_t live_ = 0;
    size_t dead_ = 0;
    size_t capacity_ = 32;
    uint32_t block_cap_ = 32;  // 2B
    Block* head_ = nullptr;
    Block* tail_ = nullptr;
    std::unique_ptr<GvebTree> index_;  // (block label, color); nullptr while single block
    std::unordered_map<uint64_t, Block*> by_label_;
    mutable uint64_t work_ = 0;
    uint64_t relabels_ = 0;

    void maybe_rebuild();
    void rebuild();
    void split_block(Block* b);
    Block* new_block_after(Block* prev);
    void relabel_around(Block* at);
    void index_insert_block(Block* b);
    void index_erase_block(Block* b);
    void tree_insert_before(Block* b, Element* next, Element* leaf);
    void splice_color_list(Block* b, Element* x, int color);
    void unsplice_color_list(Block* b, Element* x, int color);
    void destroy_block(Block* b, bool delete_leaves);
};

}  // namespace retro
