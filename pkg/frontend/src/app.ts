import { SessionApi } from "./api.js";
import {
  TreeView,
  applyTree,
  beginExpand,
  expandAcknowledged,
  expandConflicted,
  initialView,
  selectUnit,
} from "./state.js";
import {
  RenderContext,
  renderConflictBanner,
  renderDetail,
  renderMap,
  replaceUnitSubtree,
} from "./render.js";
import { ConflictError } from "./types.js";

/** Wires state, rendering and the session API together. Exactly one
 * mutation may be in flight; conflicts surface as a refresh prompt and
 * are never retried silently. */
export class ExplorerApp {
  view: TreeView = initialView();
  private registry = new Map<string, HTMLElement>();
  private treeHost: HTMLElement;
  private panelHost: HTMLElement;
  private bannerHost: HTMLElement;

  constructor(
    private api: SessionApi,
    private sessionId: string,
    root: HTMLElement,
  ) {
    this.bannerHost = document.createElement("div");
    this.treeHost = document.createElement("div");
    this.treeHost.className = "tree-host";
    this.panelHost = document.createElement("div");
    this.panelHost.className = "panel-host";
    root.replaceChildren(this.bannerHost, this.treeHost, this.panelHost);
  }

  private context(): RenderContext {
    return {
      groups: this.view.groups,
      onSelect: (path) => void this.select(path),
      registry: this.registry,
    };
  }

  async load(): Promise<void> {
    const resp = await this.api.getTree(this.sessionId);
    this.view = applyTree(this.view, resp);
    this.renderTree();
  }

  private renderTree(): void {
    if (!this.view.tree) {
      return;
    }
    this.registry.clear();
    this.treeHost.replaceChildren(renderMap(this.view.tree.root, this.context()));
  }

  async select(path: string): Promise<void> {
    this.view = selectUnit(this.view, path);
    const detail = await this.api.getUnit(this.sessionId, path);
    this.panelHost.replaceChildren(
      renderDetail(detail, {
        onExpand: (p) => void this.requestExpand(p),
        expandDisabled: this.view.pendingExpansion,
      }),
    );
  }

  /** POST one expansion, then redraw only the changed subtrees from the
   * next acknowledged export. */
  async requestExpand(path: string): Promise<void> {
    const pending = beginExpand(this.view);
    if (pending === null) {
      return; // a mutation is already in flight
    }
    this.view = pending;
    try {
      const resp = await this.api.postExpand(this.sessionId, path);
      this.view = expandAcknowledged(this.view, resp);
      const treeResp = await this.api.getTree(this.sessionId);
      this.view = applyTree(this.view, treeResp);
      if (this.view.tree) {
        for (const changed of resp.changed_paths) {
          replaceUnitSubtree(this.view.tree.root, changed, this.context());
        }
      }
      if (this.view.selected) {
        await this.select(this.view.selected);
      }
    } catch (err) {
      if (err instanceof ConflictError) {
        this.view = expandConflicted(this.view);
        this.bannerHost.replaceChildren(
          renderConflictBanner(() => void this.refresh()),
        );
        return;
      }
      this.view = { ...this.view, pendingExpansion: false };
      throw err;
    }
  }

  async refresh(): Promise<void> {
    this.bannerHost.replaceChildren();
    const resp = await this.api.getTree(this.sessionId);
    this.view = applyTree(this.view, resp);
    this.renderTree();
    if (this.view.selected) {
      await this.select(this.view.selected);
    }
  }
}
