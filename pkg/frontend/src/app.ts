/**
 * Hash-routed explorer over the dependency service: a landing page of
 * curated entry points, one page per item with its deps and rdeps, and
 * the three query forms (path, via, avoiding).
 *
 * Every graph fact on screen is a verbatim service response; the only
 * client-side logic is routing, input validation, and rendering.
 */

import { ApiClient, ApiError, ItemView, QueryAnswer } from "./api.js";

export type Route = { page: "landing" } | { page: "item"; id: string };

// The slice of window the app needs, so tests can drive it headlessly.
export interface AppWindow {
  location: { hash: string };
  addEventListener(type: "hashchange", listener: () => void): void;
}

export function itemHash(id: string): string {
  return `#/item/${encodeURIComponent(id)}`;
}

export function parseRoute(hash: string): Route {
  if (hash.startsWith("#/item/")) {
    return { page: "item", id: decodeURIComponent(hash.slice("#/item/".length)) };
  }
  return { page: "landing" };
}

type QueryKind = "path" | "via" | "avoiding";

const QUERY_TITLES: Record<QueryKind, string> = {
  path: "Path",
  via: "Mandatory waypoint",
  avoiding: "Path avoiding",
};

const QUERY_HINTS: Record<QueryKind, string> = {
  path: "Is there a dependency path from one item to another?",
  via: "Does every path between the two items pass through the waypoint?",
  avoiding: "Is the target still reachable with the listed items deleted?",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  node.append(...children);
  return node;
}

function itemLink(id: string, text?: string): HTMLAnchorElement {
  return el("a", { href: itemHash(id), class: "item-link" }, [text ?? id]);
}

function labeled(text: string, input: HTMLInputElement): HTMLLabelElement {
  return el("label", {}, [el("span", {}, [text]), input]);
}

export class App {
  private renderSeq = 0;
  private querySeq: Record<QueryKind, number> = { path: 0, via: 0, avoiding: 0 };
  private readonly banner: HTMLElement;
  private readonly page: HTMLElement;

  constructor(
    root: HTMLElement,
    private readonly client: ApiClient,
    private readonly win: AppWindow,
  ) {
    this.banner = el("div", { class: "stale-banner", hidden: "" });
    this.page = el("main", { class: "page" });
    root.replaceChildren(this.banner, this.page);
    client.onFingerprintChange = () => this.showStaleBanner();
    win.addEventListener("hashchange", () => void this.render());
  }

  /** Render whatever the current location hash names. */
  async render(): Promise<void> {
    const seq = ++this.renderSeq;
    const route = parseRoute(this.win.location.hash);
    const content =
      route.page === "item" ? await this.itemPage(route.id) : await this.landingPage();
    if (seq !== this.renderSeq) {
      return; // a later navigation superseded this render
    }
    this.page.replaceChildren(content);
  }

  private showStaleBanner(): void {
    this.banner.textContent =
      "The service reloaded its graph; this page may be stale. Navigate or reload to refresh.";
    this.banner.removeAttribute("hidden");
  }

  private errorBanner(err: unknown): HTMLElement {
    const message = err instanceof Error ? err.message : String(err);
    const retry = el("button", { type: "button", class: "retry" }, ["Retry"]);
    retry.addEventListener("click", () => void this.render());
    return el("div", { class: "error-banner" }, [`Service unavailable: ${message} `, retry]);
  }

  private async landingPage(): Promise<HTMLElement> {
    const container = el("section", { class: "landing" }, [
      el("h1", {}, ["Dependency explorer"]),
    ]);
    try {
      const entries = await this.client.entryPoints();
      if (entries.length === 0) {
        container.append(
          el("p", { class: "empty-state" }, [
            "No entry points are configured for this graph. " +
              "Open any item page directly by its id, for example #/item/a:definition:1.",
          ]),
        );
      } else {
        container.append(el("p", {}, ["Curated starting points for exploration:"]));
        const list = el("ul", { class: "entry-points" });
        for (const entry of entries) {
          list.append(el("li", {}, [itemLink(entry.id, entry.label)]));
        }
        container.append(list);
      }
    } catch (err) {
      container.append(this.errorBanner(err));
    }
    return container;
  }

  private async itemPage(id: string): Promise<HTMLElement> {
    let item: ItemView;
    try {
      item = await this.client.item(id);
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        return el("section", { class: "not-found" }, [
          el("h1", {}, ["Not found"]),
          el("p", {}, [
            `No item named "${id}" exists in this graph. `,
            el("a", { href: "#/" }, ["Back to entry points"]),
          ]),
        ]);
      }
      return el("section", { class: "item-page" }, [this.errorBanner(err)]);
    }

    return el("section", { class: "item-page" }, [
      el("header", {}, [
        el("h1", {}, [item.id]),
        el("p", { class: "item-meta" }, [
          `${item.kind}. Transitive deps: ${item.descendants}. Transitive rdeps: ${item.ancestors}.`,
        ]),
        el("p", {}, [el("a", { href: "#/" }, ["All entry points"])]),
      ]),
      this.idList("Depends on", "deps", item.deps),
      this.idList("Depended on by", "rdeps", item.rdeps),
      el("h2", {}, ["Queries"]),
      this.queryForm("path", item.id),
      this.queryForm("via", item.id),
      this.queryForm("avoiding", item.id),
    ]);
  }

  private idList(title: string, cls: string, ids: string[]): HTMLElement {
    const section = el("section", { class: cls }, [
      el("h2", {}, [`${title} (${ids.length})`]),
    ]);
    if (ids.length === 0) {
      section.append(el("p", { class: "none" }, ["none"]));
      return section;
    }
    const list = el("ul");
    for (const id of ids) {
      list.append(el("li", {}, [itemLink(id)]));
    }
    section.append(list);
    return section;
  }

  private queryForm(kind: QueryKind, currentId: string): HTMLElement {
    // "from" prefills with the page's item so exploration flows from
    // the item straight into a question about it.
    const fromInput = el("input", { type: "text", name: "from", value: currentId });
    fromInput.value = currentId;
    const toInput = el("input", { type: "text", name: "to" });
    let extraInput: HTMLInputElement | null = null;
    if (kind === "via") {
      extraInput = el("input", { type: "text", name: "via" });
    } else if (kind === "avoiding") {
      extraInput = el("input", {
        type: "text",
        name: "avoid",
        placeholder: "comma separated ids",
      });
    }

    const submit = el("button", { type: "submit" }, ["Ask"]);
    const error = el("p", { class: "form-error", hidden: "" });
    const answer = el("div", { class: "answer" });

    const required = kind === "via" ? [fromInput, toInput, extraInput!] : [fromInput, toInput];
    const refresh = () => {
      submit.disabled = required.some((input) => input.value.trim() === "");
    };
    refresh();

    const form = el("form", { class: `query-form query-${kind}` }, [
      el("h3", {}, [QUERY_TITLES[kind]]),
      el("p", { class: "hint" }, [QUERY_HINTS[kind]]),
      labeled("from", fromInput),
      labeled("to", toInput),
    ]);
    if (extraInput) {
      form.append(labeled(kind === "via" ? "via" : "avoid", extraInput));
    }
    form.append(submit, error, answer);

    for (const input of required) {
      input.addEventListener("input", refresh);
    }
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitQuery(kind, fromInput, toInput, extraInput, submit, error, answer);
    });
    return form;
  }

  private async submitQuery(
    kind: QueryKind,
    fromInput: HTMLInputElement,
    toInput: HTMLInputElement,
    extraInput: HTMLInputElement | null,
    submit: HTMLButtonElement,
    error: HTMLElement,
    answer: HTMLElement,
  ): Promise<void> {
    const from = fromInput.value.trim();
    const to = toInput.value.trim();
    error.textContent = "";
    error.setAttribute("hidden", "");

    let request: () => Promise<QueryAnswer>;
    if (kind === "path") {
      request = () => this.client.queryPath(from, to);
    } else if (kind === "via") {
      const via = extraInput!.value.trim();
      request = () => this.client.queryVia(from, to, via);
    } else {
      const blocked = extraInput!.value
        .split(",")
        .map((part) => part.trim())
        .filter((part) => part !== "");
      if (blocked.includes(from) || blocked.includes(to)) {
        // Invalid by construction; the service would only echo a 400.
        error.textContent = "The avoid list must not contain an endpoint.";
        error.removeAttribute("hidden");
        return;
      }
      request = () => this.client.queryAvoiding(from, to, blocked);
    }

    const seq = ++this.querySeq[kind];
    submit.disabled = true; // one in-flight request per form
    try {
      const result = await request();
      if (seq === this.querySeq[kind]) {
        this.renderAnswer(answer, result);
      }
    } catch (err) {
      if (seq === this.querySeq[kind]) {
        answer.replaceChildren(
          el("p", { class: "answer-error" }, [err instanceof Error ? err.message : String(err)]),
        );
      }
    } finally {
      if (seq === this.querySeq[kind]) {
        submit.disabled = false;
      }
    }
  }

  private renderAnswer(answer: HTMLElement, result: QueryAnswer): void {
    answer.replaceChildren(el("p", { class: "verdict" }, [result.answer ? "yes" : "no"]));
    if (result.witness && result.witness.length > 0) {
      const trail = el("p", { class: "witness" });
      result.witness.forEach((hop, index) => {
        if (index > 0) {
          trail.append(" -> ");
        }
        trail.append(itemLink(hop));
      });
      answer.append(trail);
    }
  }
}
