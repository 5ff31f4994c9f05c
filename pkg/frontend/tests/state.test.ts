import { describe, expect, it } from "vitest";

import {
  applyTree,
  beginExpand,
  expandAcknowledged,
  expandConflicted,
  initialView,
  selectUnit,
} from "../src/state.js";
import { fixtureGroups, fixtureTree } from "./helpers.js";

function treeResponse(revision: number) {
  return {
    session_id: "s",
    revision,
    tree: fixtureTree(),
    dominant_groups: fixtureGroups(),
  };
}

describe("tree view state", () => {
  it("adopts newer revisions and keeps transitions pure", () => {
    const v0 = initialView();
    const v1 = applyTree(v0, treeResponse(0));
    expect(v0.tree).toBeNull(); // v0 untouched
    expect(v1.revision).toBe(0);
    expect(v1.tree).not.toBeNull();
  });

  it("never adopts a revision older than the acknowledged one", () => {
    let view = applyTree(initialView(), treeResponse(0));
    view = expandAcknowledged(view, { revision: 3, changed_paths: [] });
    const stale = applyTree(view, treeResponse(2));
    expect(stale).toBe(view); // unchanged object, nothing to re-render
    const fresh = applyTree(view, treeResponse(3));
    expect(fresh.revision).toBe(3);
  });

  it("allows a single expansion in flight", () => {
    const view = applyTree(initialView(), treeResponse(0));
    const pending = beginExpand(view);
    expect(pending).not.toBeNull();
    expect(beginExpand(pending!)).toBeNull();
    const done = expandAcknowledged(pending!, { revision: 1, changed_paths: [] });
    expect(done.pendingExpansion).toBe(false);
    expect(done.revision).toBe(1);
  });

  it("marks conflicts for an explicit refresh", () => {
    const view = beginExpand(applyTree(initialView(), treeResponse(0)))!;
    const conflicted = expandConflicted(view);
    expect(conflicted.pendingExpansion).toBe(false);
    expect(conflicted.needsRefresh).toBe(true);
    // a fresh tree clears the flag
    expect(applyTree(conflicted, treeResponse(1)).needsRefresh).toBe(false);
  });

  it("tracks selection without touching the tree", () => {
    const view = applyTree(initialView(), treeResponse(0));
    const selected = selectUnit(view, "[R][01]");
    expect(selected.selected).toBe("[R][01]");
    expect(selected.tree).toBe(view.tree);
  });
});
