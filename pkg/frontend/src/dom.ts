/** Tiny DOM construction helpers; no framework, no templates. */

type Child = Node | string;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

export function clear(node: HTMLElement): HTMLElement {
  node.textContent = "";
  return node;
}

/** Replace `panel`'s contents with the given children. */
export function fill(panel: HTMLElement, ...children: Child[]): HTMLElement {
  clear(panel);
  panel.append(...children);
  return panel;
}
