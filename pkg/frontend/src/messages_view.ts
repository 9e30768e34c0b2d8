/** Aggregated runtime diagnostics: errors first, then warnings, each with the
 * number of universes sharing the message. Clicking an entry highlights its
 * universes in the main-effect view; long messages expand via "show more".
 */

import { clear, el } from "./dom.js";
import type { MessageDoc } from "./types.js";

const TRUNCATE_AT = 90;

export function renderMessages(
  container: HTMLElement,
  messages: MessageDoc[],
  selected: string | null,
  onSelect: (text: string) => void,
): void {
  clear(container);
  if (!messages.length) {
    container.append(el("p", { class: "empty" }, "no errors or warnings"));
    return;
  }
  const list = el("ul", { class: "message-list" });
  for (const message of messages) {
    const item = el("li", {
      class: `message ${message.severity}${selected === message.text ? " selected" : ""}`,
      "data-severity": message.severity,
      "data-count": message.count,
    });
    const badge = el("span", { class: `badge ${message.severity}` }, String(message.count));
    const truncated = message.text.length > TRUNCATE_AT;
    const body = el("span", { class: "message-text" },
      truncated ? message.text.slice(0, TRUNCATE_AT) + "…" : message.text);
    item.append(badge, body);
    if (truncated) {
      const more = el("button", { class: "show-more" }, "show more");
      more.addEventListener("click", (event) => {
        event.stopPropagation();
        body.textContent = message.text;
        more.remove();
      });
      item.append(more);
    }
    item.addEventListener("click", () => onSelect(message.text));
    list.append(item);
  }
  container.append(list);
}
