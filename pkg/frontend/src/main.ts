import { ConsoleApi } from "./api.js";
import { wireConsole } from "./ui.js";

wireConsole(document, (origin) => new ConsoleApi(origin));
