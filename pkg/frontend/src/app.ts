/** Application shell: workspace picker, status badge strip, and the
 *  Compiler / Run / Interpret tabs. */
import { Api } from "./api.js";
import { el, fill } from "./dom.js";
import { ViewContext, mountCompiler } from "./compiler.js";
import { mountRun } from "./runview.js";
import { mountInterpret } from "./interpret.js";
import { renderBadges } from "./widgets.js";

export type TabName = "compiler" | "run" | "interpret";

export interface BootOptions {
  base?: string;
  tab?: TabName;
}

const TABS: Array<[TabName, string]> = [
  ["compiler", "Compiler"],
  ["run", "Run"],
  ["interpret", "Interpret"],
];

export async function boot(root: HTMLElement,
                           options: BootOptions = {}): Promise<void> {
  const api = new Api(options.base ?? "");
  let wsId: string | null = null;
  let activeTab: TabName = options.tab ?? "compiler";

  const picker = el("select", { id: "workspace-picker" });
  const nameBox = el("input", {
    id: "new-workspace-name", type: "text", placeholder: "workspace name",
  });
  const createButton = el("button", { id: "new-workspace" }, "New");
  const badgeStrip = el("div", { id: "badge-strip", "class": "badge-strip" });
  const tabBar = el("nav", { "class": "tab-bar" });
  const viewBox = el("main", { id: "view" });

  const tabButtons = new Map<TabName, HTMLButtonElement>();
  for (const [tab, label] of TABS) {
    const button = el("button", { "class": "tab", "data-tab": tab }, label);
    button.addEventListener("click", () => activate(tab));
    tabButtons.set(tab, button);
    tabBar.append(button);
  }

  fill(root,
       el("header", {},
          el("h1", {}, "tws workbench"),
          el("div", { "class": "workspace-row" }, picker, nameBox, createButton),
          badgeStrip),
       tabBar, viewBox);

  async function refreshBadges(): Promise<void> {
    if (wsId === null) return;
    const reply = await api.status(wsId);
    renderBadges(badgeStrip, reply.body);
  }

  async function activate(tab: TabName): Promise<void> {
    activeTab = tab;
    for (const [name, button] of tabButtons) {
      button.classList.toggle("active", name === tab);
    }
    fill(viewBox);
    if (wsId === null) {
      fill(viewBox, el("p", {}, "create a workspace to begin"));
      return;
    }
    await refreshBadges();
    const ctx: ViewContext = { api, wsId, refreshBadges };
    if (tab === "compiler") await mountCompiler(viewBox, ctx);
    else if (tab === "run") await mountRun(viewBox, ctx);
    else await mountInterpret(viewBox, ctx);
  }

  async function reloadWorkspaces(selectId?: string): Promise<void> {
    const reply = await api.listWorkspaces();
    fill(picker, ...reply.body.map((ws) =>
      el("option", { value: ws.id }, `${ws.name} (${ws.id})`)));
    if (reply.body.length === 0) {
      wsId = null;
    } else {
      wsId = selectId ?? reply.body[0].id;
      picker.value = wsId;
    }
    await activate(activeTab);
  }

  picker.addEventListener("change", async () => {
    wsId = picker.value;
    await activate(activeTab);
  });

  createButton.addEventListener("click", async () => {
    const name = nameBox.value.trim() || "untitled";
    const reply = await api.createWorkspace(name);
    nameBox.value = "";
    await reloadWorkspaces(reply.body.id);
  });

  await reloadWorkspaces();
}

const mountPoint = typeof document !== "undefined"
  ? document.getElementById("app")
  : null;
if (mountPoint !== null) {
  void boot(mountPoint);
}
