import { ExpandResponse, TreeExport, TreeResponse } from "./types.js";

/** Client mirror of the session: last acknowledged export, selection and
 * the single-mutation-in-flight flag. All transitions are pure so the UI
 * is a function of this object alone. */
export interface TreeView {
  readonly revision: number;
  readonly tree: TreeExport | null;
  readonly groups: Readonly<Record<string, string>>;
  readonly selected: string | null;
  readonly pendingExpansion: boolean;
  readonly needsRefresh: boolean;
}

export function initialView(): TreeView {
  return {
    revision: -1,
    tree: null,
    groups: {},
    selected: null,
    pendingExpansion: false,
    needsRefresh: false,
  };
}

/** Adopt a tree response; a payload older than the last acknowledged
 * revision is never rendered and leaves the view untouched. */
export function applyTree(view: TreeView, resp: TreeResponse): TreeView {
  if (resp.revision < view.revision) {
    return view;
  }
  return {
    ...view,
    revision: resp.revision,
    tree: resp.tree,
    groups: resp.dominant_groups,
    needsRefresh: false,
  };
}

export function selectUnit(view: TreeView, path: string | null): TreeView {
  return { ...view, selected: path };
}

/** Returns null when a mutation is already in flight (optimistic UI and
 * parallel mutations are both forbidden). */
export function beginExpand(view: TreeView): TreeView | null {
  if (view.pendingExpansion) {
    return null;
  }
  return { ...view, pendingExpansion: true };
}

export function expandAcknowledged(view: TreeView, resp: ExpandResponse): TreeView {
  return { ...view, pendingExpansion: false, revision: resp.revision };
}

export function expandConflicted(view: TreeView): TreeView {
  return { ...view, pendingExpansion: false, needsRefresh: true };
}
