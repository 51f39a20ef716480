export { QubitRegister } from "./register.js";
export type { Amplitude, RegisterOptions } from "./register.js";
